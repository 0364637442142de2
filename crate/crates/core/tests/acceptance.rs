//! One PASS/FAIL line per acceptance criterion. Always exits 0; the tally
//! is the last line.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::gen::{random_archive, random_bounds, random_dims, random_edits};
use common::qp::{box_constraints, dft_box_constraints, nearest_point};
use common::{c, field1, max_diff, random_field_as, rng};
use dualbound::codec::{
    apply_edits, decode_streams, dequantize_edits, encode_streams, quantize_edits, read_archive, verify_bounds,
    write_archive, FlagVec, QuantizationParams,
};
use dualbound::ingest::{synth_field, trial_and_error_tune, uniform_quantize_compress, SynthKind, UniformQuantizer};
use dualbound::metrics::{compare_spectra, max_power_relative_error};
use dualbound::pipeline::{correct, resolve_frequency, resolve_spatial, spectrum_bounds, BoundSpec, CorrectionConfig};
use dualbound::projection::{alternating_projection, project_onto_fcube, project_onto_scube};
use dualbound::shape::HalfSpectrum;
use dualbound::transform::{brute_force_dft, forward_dft, inverse_dft, ORACLE_CAP};
use dualbound::{DualBounds, FrequencyBound, Precision, ScalarField, SpatialBound};
use nalgebra::DVector;
use rand::RngExt;

const SUITE_SIZE: usize = 200;
const SUITE_BUDGET: Duration = Duration::from_secs(300);
const RIBBON_BUDGET: Duration = Duration::from_secs(120);
const ORACLE_RTOL: f64 = 1e-9;
const PARSEVAL_RTOL: f64 = 1e-9;
const HAND_TOL: f64 = 1e-12;
const RHO: f64 = 1e-3;
const FUZZ_CASES: u64 = 1000;
const FUZZ_M: u8 = 16;
const SEEDS_7: u64 = 50;
const WIN_FRACTION_7: f64 = 0.9;
const QP_TOL: f64 = 1e-9;
const QP_CASES: u64 = 500;

type Verdict = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

struct SuiteField {
    field: ScalarField,
    delta_pct: f64,
}

fn suite_dims(i: usize) -> Vec<usize> {
    let j = i / 3;
    match i % 3 {
        0 => vec![[17, 64, 1000][j % 3]],
        1 => {
            let sides = [9, 32, 64, 100, 128];
            vec![sides[j % 5], sides[(j + 2) % 5]]
        }
        _ => vec![[6, 12, 17, 32, 64][j % 5]; 3],
    }
}

fn suite() -> Vec<SuiteField> {
    (0..SUITE_SIZE)
        .map(|i| {
            let dims = suite_dims(i);
            let precision = if i % 2 == 0 { Precision::F64 } else { Precision::F32 };
            let field = match i % 4 {
                0 | 1 => random_field_as(&dims, i as u64, precision),
                2 => synth_field(SynthKind::PowerLaw { alpha: 2.0 }, &dims, i as u64).unwrap().cast(precision).unwrap(),
                _ => synth_field(SynthKind::WhiteNoise, &dims, i as u64).unwrap().cast(precision).unwrap(),
            };
            SuiteField {
                field,
                delta_pct: [1e-1, 1e-2, 1e-3][(i / 4) % 3],
            }
        })
        .collect()
}

fn relative_bounds(f: &ScalarField, eps_pct: f64, delta_pct: f64) -> DualBounds {
    DualBounds::global(
        resolve_spatial(BoundSpec::Relative(eps_pct), f).unwrap(),
        resolve_frequency(BoundSpec::Relative(delta_pct), f).unwrap(),
    )
    .unwrap()
}

fn dual_domain_guarantee(suite: &[SuiteField]) -> Verdict {
    let start = Instant::now();
    let mut failures = Vec::new();
    for (i, s) in suite.iter().enumerate() {
        let bounds = relative_bounds(&s.field, 0.1, s.delta_pct);
        let (decompressed, _) = uniform_quantize_compress(&s.field, bounds.spatial_at(0)).unwrap();
        let c = correct(&s.field, &decompressed, &bounds, &CorrectionConfig::default()).unwrap();
        let archive = read_archive(&c.archive_bytes).unwrap();
        let out = apply_edits(&decompressed, &archive.decode_edits())
            .unwrap()
            .cast(s.field.precision())
            .unwrap();
        let check = verify_bounds(&s.field, &out, &bounds).unwrap();
        let violations = check.spatial_violations.len() + check.frequency_violations.len();
        if !check.ok || violations > 0 {
            failures.push(format!("#{i} {:?} {}: {violations} violations", s.field.dims(), s.field.precision()));
        }
    }
    let elapsed = start.elapsed();
    let detail = format!("{} fields, {} failing, {:.1} s", suite.len(), failures.len(), elapsed.as_secs_f64());
    if failures.is_empty() && elapsed <= SUITE_BUDGET {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", failures.join(", ")))
    }
}

fn oracle_equivalence(suite: &[SuiteField]) -> Verdict {
    let (mut worst_oracle, mut worst_parseval, mut compared) = (0.0f64, 0.0f64, 0);
    for s in suite {
        let fast = forward_dft(&s.field).unwrap();
        if s.field.len() <= ORACLE_CAP {
            let slow = brute_force_dft(&s.field).unwrap();
            let scale = slow.max_magnitude().max(f64::MIN_POSITIVE);
            let diff = fast.values().iter().zip(slow.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            worst_oracle = worst_oracle.max(diff / scale);
            compared += 1;
        }
        let energy: f64 = s.field.values().iter().map(|v| v * v).sum();
        let spectral: f64 = fast.values().iter().map(|v| v.norm_sqr()).sum();
        let n = s.field.len() as f64;
        worst_parseval = worst_parseval.max((spectral - n * energy).abs() / (n * energy));
    }
    let detail = format!(
        "{compared} fields vs oracle, max rel {worst_oracle:.2e}; Parseval max rel {worst_parseval:.2e} over {}",
        suite.len()
    );
    if worst_oracle <= ORACLE_RTOL && worst_parseval <= PARSEVAL_RTOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn hand_traced_case() -> Verdict {
    let b = DualBounds::global(1.0, 1.0).unwrap();
    let out = alternating_projection(&field1(&[1.0, 1.0]), &b, 1000).unwrap();
    let r = &out.report;
    let final_err = max_diff(out.final_epsilon.values(), &[0.5, 0.5]);
    let edit_err = (out.edits.frequency[0] - c(-1.0, 0.0)).norm() + out.edits.frequency[1].norm();
    let detail = format!(
        "final error {:?}, {} frequency / {} spatial edits, {} checks",
        out.final_epsilon.values(),
        r.active_frequency,
        r.active_spatial,
        r.checks
    );
    let exact = final_err <= HAND_TOL && edit_err <= HAND_TOL;
    if r.converged && exact && r.active_frequency == 1 && r.active_spatial == 0 && r.checks == 2 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn tight_delta_regime() -> Verdict {
    let mut rows = Vec::new();
    let mut ok = true;
    for (seed, delta_pct) in [(0, 1e-4), (1, 1e-5)] {
        let f = synth_field(SynthKind::PowerLaw { alpha: 2.0 }, &[64, 64, 64], seed).unwrap();
        let bounds = relative_bounds(&f, 0.1, delta_pct);
        let (decompressed, _) = uniform_quantize_compress(&f, bounds.spatial_at(0)).unwrap();
        let c = correct(&f, &decompressed, &bounds, &CorrectionConfig::default()).unwrap();
        let p = &c.report.projection;
        ok &= c.report.converged && c.report.verified && p.iterations == 1 && p.active_spatial == 0;
        rows.push(format!("delta {delta_pct:e}%: iterations {}, active spatial {}", p.iterations, p.active_spatial));
    }
    let detail = rows.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn power_spectrum_ribbon() -> Verdict {
    let start = Instant::now();
    let f = synth_field(SynthKind::PowerLaw { alpha: 2.0 }, &[64, 64, 64], 7).unwrap().cast(Precision::F32).unwrap();
    let e = resolve_spatial(BoundSpec::Relative(0.1), &f).unwrap();
    let bounds = spectrum_bounds(&f, e, RHO).unwrap();
    let (decompressed, _) = uniform_quantize_compress(&f, e).unwrap();
    let c = correct(&f, &decompressed, &bounds, &CorrectionConfig::default()).unwrap();
    let archive = read_archive(&c.archive_bytes).unwrap();
    let out = apply_edits(&decompressed, &archive.decode_edits()).unwrap().cast(f.precision()).unwrap();
    let bins = compare_spectra(&f, &out).unwrap();
    let worst = max_power_relative_error(&bins);
    let before = max_power_relative_error(&compare_spectra(&f, &decompressed).unwrap());
    let elapsed = start.elapsed();
    let detail = format!(
        "max shell error {worst:.3e} (base {before:.3e}) over {} bins, {:.1} s",
        bins.iter().filter(|b| b.ratio.is_some()).count(),
        elapsed.as_secs_f64()
    );
    if c.report.converged && worst <= RHO && elapsed <= RIBBON_BUDGET {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn codec_integrity() -> Verdict {
    let (mut mismatches, mut lane_violations) = (0, 0);
    let scale = (-(FUZZ_M as f64)).exp2() * (1.0 + 1e-12);
    for seed in 0..FUZZ_CASES {
        let mut r = rng(seed);
        let a = random_archive(&mut r);
        if read_archive(&write_archive(&a).unwrap()).ok() != Some(a) {
            mismatches += 1;
        }

        let len = r.random_range(0..20_000usize);
        let idx: Vec<i32> = (0..len).map(|_| r.random_range(-70_000..70_000)).collect();
        let flags = FlagVec::from_fn(r.random_range(0..5_000usize), |_| r.random::<bool>());
        let s = encode_streams(&flags, &idx).unwrap();
        if decode_streams(&s, flags.len()).ok() != Some((flags, idx)) {
            mismatches += 1;
        }

        let dims = random_dims(&mut r);
        let bounds = random_bounds(&mut r, &dims);
        let params = QuantizationParams::new(FUZZ_M, bounds.clone(), &dims).unwrap();
        let edits = random_edits(&mut r, &dims, 0.5, 3.0);
        let back = dequantize_edits(&quantize_edits(&edits, &params).unwrap(), &params);
        let spatial = edits.spatial_flags.iter_ones().zip(&edits.spatial_values).zip(&back.spatial_values);
        for ((slot, a), b) in spatial {
            lane_violations += usize::from((a - b).abs() > bounds.spatial_at(slot) * scale);
        }
        let half = HalfSpectrum::new(&dims);
        let frequency = edits.frequency_flags.iter_ones().zip(&edits.frequency_values).zip(&back.frequency_values);
        for ((slot, a), b) in frequency {
            let (br, bi) = bounds.frequency_at(half.full_index(slot));
            lane_violations += usize::from((a.re - b.re).abs() > br * scale || (a.im - b.im).abs() > bi * scale);
        }
    }
    let detail = format!("{FUZZ_CASES} cases, {mismatches} roundtrip mismatches, {lane_violations} lane violations");
    if mismatches == 0 && lane_violations == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn trial_and_error_comparison() -> Verdict {
    let mut wins = 0;
    for seed in 0..SEEDS_7 {
        let f = synth_field(SynthKind::WhiteNoise, &[32, 32, 32], seed).unwrap().cast(Precision::F32).unwrap();
        let bounds = relative_bounds(&f, 0.1, 1e-3);
        let e = bounds.spatial_at(0);
        let (decompressed, base_payload) = uniform_quantize_compress(&f, e).unwrap();
        let c = correct(&f, &decompressed, &bounds, &CorrectionConfig::default()).unwrap();
        if !(c.report.converged && c.report.verified) {
            continue;
        }
        let total = base_payload + if c.archive.decode_edits().is_empty() { 0 } else { c.archive_bytes.len() as u64 };
        match trial_and_error_tune(&f, bounds.frequency(), &UniformQuantizer, e, 0.5) {
            Ok(t) => wins += usize::from(total < t.output.payload_bytes),
            Err(_) => wins += 1,
        }
    }
    let detail = format!("correction smaller in {wins}/{SEEDS_7} seeds");
    if wins as f64 >= WIN_FRACTION_7 * SEEDS_7 as f64 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn non_convergence_honesty() -> Verdict {
    let original = field1(&[0.0, 0.0]);
    let decompressed = field1(&[1.0, 1.0]);
    let bounds = DualBounds::global(0.1, 0.05).unwrap();
    let config = CorrectionConfig {
        max_iters: 1000,
        ..CorrectionConfig::default()
    };
    match correct(&original, &decompressed, &bounds, &config) {
        Ok(c) => {
            let p = &c.report.projection;
            let bounded = p.residual_f.is_finite() && p.residual_s.is_finite();
            let detail = format!(
                "converged {}, iterations {}, residuals f {:.3e} s {:.3e}, archive feasible {}",
                c.report.converged,
                p.iterations,
                p.residual_f,
                p.residual_s,
                c.archive.status.feasible()
            );
            if !c.report.converged && p.iterations == config.max_iters && bounded && !c.archive.status.feasible() {
                Ok(detail)
            } else {
                Err(detail)
            }
        }
        Err(e) => Err(format!("{e}; both cubes contain the zero error, so no disjoint pair exists")),
    }
}

fn clamp_optimality() -> Verdict {
    let mut worst = 0.0f64;
    for seed in 0..QP_CASES {
        let mut r = rng(seed);
        let n = r.random_range(1..=8usize);
        let x: Vec<f64> = (0..n).map(|_| 4.0 * r.random::<f64>() - 2.0).collect();

        let e: Vec<f64> = (0..n).map(|_| 0.1 + r.random::<f64>()).collect();
        let b = DualBounds::new(SpatialBound::PerPoint(e.clone()), FrequencyBound::Global(1.0), &[n]).unwrap();
        let (clipped, _) = project_onto_scube(&field1(&x), &b).unwrap();
        let (a, bb) = box_constraints(&e);
        let oracle = nearest_point(&a, &bb, &DVector::from_vec(x.clone()), &DVector::zeros(n));
        worst = worst.max(max_diff(clipped.values(), oracle.as_slice()));

        let half: Vec<f64> = (0..=n / 2).map(|_| 0.1 + r.random::<f64>()).collect();
        let d: Vec<f64> = (0..n).map(|k| half[k.min(n - k)]).collect();
        let b = DualBounds::new(
            SpatialBound::Global(10.0),
            FrequencyBound::PerComponent { re: d.clone(), im: d },
            &[n],
        )
        .unwrap();
        let (clipped, _) = project_onto_fcube(&forward_dft(&field1(&x)).unwrap(), &b).unwrap();
        let projected = inverse_dft(&clipped).unwrap();
        let (a, bb) = dft_box_constraints(n, &half, &half);
        let oracle = nearest_point(&a, &bb, &DVector::from_vec(x), &DVector::zeros(n));
        worst = worst.max(max_diff(projected.values(), oracle.as_slice()));
    }
    let detail = format!("{QP_CASES} spatial and {QP_CASES} frequency boxes, max deviation {worst:.2e}");
    if worst <= QP_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let suite = suite();
    let criteria: [Criterion; 9] = [
        ("dual-domain guarantee", Box::new(|| dual_domain_guarantee(&suite))),
        ("oracle equivalence", Box::new(|| oracle_equivalence(&suite))),
        ("hand-traced two-sample case", Box::new(hand_traced_case)),
        ("tight frequency bound regime", Box::new(tight_delta_regime)),
        ("power spectrum ribbon", Box::new(power_spectrum_ribbon)),
        ("codec integrity", Box::new(codec_integrity)),
        ("trial-and-error comparison", Box::new(trial_and_error_comparison)),
        ("non-convergence honesty", Box::new(non_convergence_honesty)),
        ("clamp optimality", Box::new(clamp_optimality)),
    ];
    let mut passed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match verdict {
            Ok(d) => {
                passed += 1;
                ("PASS", d)
            }
            Err(d) => ("FAIL", d),
        };
        println!("criterion {} {tag} {name}: {detail} [{secs:.1} s]", i + 1);
    }
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
}
