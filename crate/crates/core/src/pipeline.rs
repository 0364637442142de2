//! End-to-end correction: error, projection, compaction, quantization with
//! escape repair, archive.

use std::time::Instant;

use serde::Serialize;

use crate::codec::{
    apply_edits_with, dequantize_edits, quantize_edits, verify_bounds_with, write_archive, ArchiveStatus,
    BoundsCheck, EditSet, EditsArchive, QuantizationParams, QuantizedEdits, DEFAULT_CODE_LENGTH,
};
use crate::error::{Error, Result};
use crate::metrics::spectrum_mode_bounds;
use crate::projection::{
    compute_error, shrink_bounds, AlternatingProjection, DualBounds,
    ProjectionReport, SpatialBound, DEFAULT_MAX_ITERS,
};
use crate::shape::{mirror_index, HalfSpectrum};
use crate::transform::{forward_dft, Complex64, Precision, ScalarField, Transformer};

/// A bound given directly or as a percentage of a reference magnitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundSpec {
    Absolute(f64),
    /// Percent of the value range (spatial) or of `max|X|` (frequency).
    Relative(f64),
}

fn positive(value: f64, what: &str) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::validation(format!("{what} must be positive and finite, got {value}")))
    }
}

/// Absolute spatial bound; relative specs scale `max - min` of `original`.
pub fn resolve_spatial(spec: BoundSpec, original: &ScalarField) -> Result<f64> {
    match spec {
        BoundSpec::Absolute(e) => positive(e, "spatial bound"),
        BoundSpec::Relative(p) => {
            let (lo, hi) = original
                .value_range()
                .ok_or_else(|| Error::validation("relative bound of an empty field"))?;
            positive(positive(p, "relative spatial bound")? / 100.0 * (hi - lo), "resolved spatial bound")
        }
    }
}

/// Absolute frequency bound; relative specs scale `max_k |X_k|`.
pub fn resolve_frequency(spec: BoundSpec, original: &ScalarField) -> Result<f64> {
    match spec {
        BoundSpec::Absolute(d) => positive(d, "frequency bound"),
        BoundSpec::Relative(p) => {
            let max = forward_dft(original)?.max_magnitude();
            positive(positive(p, "relative frequency bound")? / 100.0 * max, "resolved frequency bound")
        }
    }
}

/// Global spatial bound with per-component frequency bounds that keep the
/// power spectrum within relative `rho`.
pub fn spectrum_bounds(original: &ScalarField, spatial: f64, rho: f64) -> Result<DualBounds> {
    let spectrum = forward_dft(original)?;
    let frequency = spectrum_mode_bounds(original, &spectrum, rho)?;
    DualBounds::new(SpatialBound::Global(positive(spatial, "spatial bound")?), frequency, original.dims())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CorrectionConfig {
    /// Quantization code length.
    pub m: u8,
    pub max_iters: usize,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        Self {
            m: DEFAULT_CODE_LENGTH,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrectionReport {
    pub converged: bool,
    /// The dequantized edits pass [`crate::codec::verify_bounds`] against
    /// the original bounds.
    pub verified: bool,
    pub m: u8,
    pub escapes: usize,
    pub escape_rounds: usize,
    pub max_spatial_excess: f64,
    pub max_freq_excess: f64,
    pub spatial_violations: usize,
    pub frequency_violations: usize,
    pub payload_bytes: u64,
    pub field_bytes: u64,
    /// `payload_bytes / field_bytes`.
    pub payload_fraction: f64,
    #[serde(rename = "wall_time_s", serialize_with = "crate::projection::serialize_secs")]
    pub wall_time: std::time::Duration,
    pub projection: ProjectionReport,
}

#[derive(Clone, Debug)]
pub struct Correction {
    pub archive: EditsArchive,
    pub archive_bytes: Vec<u8>,
    /// `decompressed` plus the decoded edits rounded to the storage
    /// precision, as a reader would write it.
    pub corrected: ScalarField,
    pub check: BoundsCheck,
    pub report: CorrectionReport,
}

/// Relative slack that lets the loop accept any `eps0` inside the original
/// spatial bound although it runs on tighter working bounds.
fn working_slack(bounds: &DualBounds, working: &DualBounds, n: usize) -> f64 {
    let ratio = (0..n)
        .map(|i| bounds.spatial_at(i) / working.spatial_at(i))
        .fold(1.0, f64::max);
    ratio * (1.0 + (-40f64).exp2()) - 1.0
}

/// Allowance for rounding the corrected field to its storage precision:
/// `(spatial, frequency)`. Each f32 sample moves by at most `u = 2^-24 M`
/// with `M >= |corrected|`, which is exact in the spatial domain. A
/// coefficient collects at most `N u`; the frequency allowance is the
/// smaller of that and eight standard deviations of uniform rounding noise,
/// `8 u sqrt(N / 6)`.
fn rounding_allowance(original: &ScalarField, bounds: &DualBounds) -> (f64, f64) {
    if original.precision() == Precision::F64 {
        return (0.0, 0.0);
    }
    let n = original.len();
    let e_max = (0..n).map(|i| bounds.spatial_at(i)).fold(0.0, f64::max);
    let x_max = original.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let u = ((x_max + 2.0 * e_max) * (-24f64).exp2()).max((-149f64).exp2());
    let nf = n as f64;
    (u, (nf * u).min(8.0 * u * (nf / 6.0).sqrt()))
}

/// Compute edits that take `decompressed` into both bounds around `original`.
///
/// `bounds` are the user's bounds. The loop runs on bounds shrunk by
/// `1 - 2^-m` and, for f32 fields, by the rounding allowance of the stored
/// output. After quantization the corrected field, rounded to the storage
/// precision, is checked against `bounds`, and edits whose quantization
/// breaks the check are stored verbatim until it passes. Non-convergence is reported through `report.converged` and
/// the archive status, not as an error.
pub fn correct(
    original: &ScalarField,
    decompressed: &ScalarField,
    bounds: &DualBounds,
    config: &CorrectionConfig,
) -> Result<Correction> {
    let start = Instant::now();
    let dims = original.dims().to_vec();
    let epsilon0 = compute_error(original, decompressed)?;
    bounds.check_len(epsilon0.len())?;
    for (n, &e) in epsilon0.values().iter().enumerate() {
        if e.abs() > bounds.spatial_at(n) {
            return Err(Error::Precondition {
                index: n,
                value: e,
                bound: bounds.spatial_at(n),
            });
        }
    }
    let (round_s, round_f) = rounding_allowance(original, bounds);
    let working = shrink_bounds(bounds, config.m)?.tightened(round_s, round_f);
    let projection = AlternatingProjection {
        max_iters: config.max_iters,
        precondition_slack: working_slack(bounds, &working, epsilon0.len()),
    };
    let outcome = projection.run(&epsilon0, &working)?;
    let edits = EditSet::from_dense(&outcome.edits);
    let params = QuantizationParams::new(config.m, bounds.clone(), &dims)?;
    let mut quantized = quantize_edits(&edits, &params)?;

    let precision = original.precision();
    let transformer = Transformer::new(&dims)?;
    let mut escalation = Escalation::new(&edits, &params);
    let mut escape_rounds = 0;
    let (corrected, check) = loop {
        let decoded = dequantize_edits(&quantized, &params);
        let corrected = apply_edits_with(&transformer, decompressed, &decoded)?.cast(precision)?;
        let check = verify_bounds_with(&transformer, original, &corrected, bounds)?;
        if check.ok || !outcome.report.converged {
            break (corrected, check);
        }
        if !escalation.step(&mut quantized, &check) {
            break (corrected, check);
        }
        escape_rounds += 1;
    };

    let status = ArchiveStatus {
        converged: outcome.report.converged,
        verified: check.ok,
    };
    let archive = EditsArchive {
        precision: original.precision(),
        params,
        status,
        edits: quantized,
    };
    let archive_bytes = write_archive(&archive)?;
    let field_bytes = (original.len() * original.precision().bytes_per_sample()) as u64;
    let report = CorrectionReport {
        converged: status.converged,
        verified: status.verified,
        m: config.m,
        escapes: archive.edits.escape_count(),
        escape_rounds,
        max_spatial_excess: check.max_spatial_excess,
        max_freq_excess: check.max_freq_excess,
        spatial_violations: check.spatial_violations.len(),
        frequency_violations: check.frequency_violations.len(),
        payload_bytes: archive_bytes.len() as u64,
        field_bytes,
        payload_fraction: archive_bytes.len() as f64 / field_bytes.max(1) as f64,
        wall_time: start.elapsed(),
        projection: outcome.report,
    };
    Ok(Correction {
        archive,
        archive_bytes,
        corrected,
        check,
        report,
    })
}

/// Escape schedule. Each round first escapes stored edits at the violated
/// positions of their own domain; when there are none left, it escapes the
/// edits with the largest quantization residual (relative to their bound),
/// doubling the count every such round. Ends once every edit is escaped.
struct Escalation {
    half: HalfSpectrum,
    dims: Vec<usize>,
    spatial_slots: Vec<usize>,
    frequency_slots: Vec<usize>,
    spatial_values: Vec<f64>,
    frequency_values: Vec<Complex64>,
    /// Candidates by decreasing residual: `(is_frequency, rank)`.
    ranked: Vec<(bool, usize)>,
    cursor: usize,
    budget: usize,
}

impl Escalation {
    fn new(edits: &EditSet, params: &QuantizationParams) -> Self {
        let half = HalfSpectrum::new(&edits.dims);
        let spatial_slots: Vec<usize> = edits.spatial_flags.iter_ones().collect();
        let frequency_slots: Vec<usize> = edits.frequency_flags.iter_ones().collect();
        let residual = |v: f64, step: f64| (v - (v / step).round() * step).abs() / step;
        let mut scored: Vec<(f64, bool, usize)> = spatial_slots
            .iter()
            .zip(&edits.spatial_values)
            .enumerate()
            .map(|(rank, (&slot, &v))| (residual(v, params.step_spatial(slot)), false, rank))
            .collect();
        scored.extend(frequency_slots.iter().zip(&edits.frequency_values).enumerate().map(
            |(rank, (&slot, v))| {
                let (sr, si) = params.step_frequency(half.full_index(slot));
                (residual(v.re, sr).max(residual(v.im, si)), true, rank)
            },
        ));
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        Self {
            dims: edits.dims.clone(),
            half,
            spatial_slots,
            frequency_slots,
            spatial_values: edits.spatial_values.clone(),
            frequency_values: edits.frequency_values.clone(),
            ranked: scored.into_iter().map(|(_, f, r)| (f, r)).collect(),
            cursor: 0,
            budget: 1,
        }
    }

    fn escape(&self, q: &mut QuantizedEdits, frequency: bool, rank: usize) -> bool {
        if frequency {
            let slot = self.frequency_slots[rank];
            if q.is_frequency_escaped(slot) {
                return false;
            }
            q.escape_frequency(rank, slot, self.frequency_values[rank]);
            // Conjugate pairs that both lie in the stored half stay exact
            // conjugates, so the expanded spectrum remains Hermitian.
            let full = self.half.full_index(slot);
            let mirror = mirror_index(&self.dims, full);
            if let Some(pair) = self.half.half_index(mirror).filter(|_| mirror != full) {
                if let Ok(pair_rank) = self.frequency_slots.binary_search(&pair) {
                    if !q.is_frequency_escaped(pair) {
                        q.escape_frequency(pair_rank, pair, self.frequency_values[pair_rank]);
                    }
                }
            }
        } else {
            let slot = self.spatial_slots[rank];
            if q.is_spatial_escaped(slot) {
                return false;
            }
            q.escape_spatial(rank, slot, self.spatial_values[rank]);
        }
        true
    }

    /// Returns `false` when nothing is left to escape.
    fn step(&mut self, q: &mut QuantizedEdits, check: &BoundsCheck) -> bool {
        let mut added = 0;
        for &n in &check.spatial_violations {
            if let Ok(rank) = self.spatial_slots.binary_search(&n) {
                added += usize::from(self.escape(q, false, rank));
            }
        }
        for &k in &check.frequency_violations {
            let h = self
                .half
                .half_index(k)
                .or_else(|| self.half.half_index(mirror_index(&self.dims, k)))
                .expect("every coefficient or its mirror is stored");
            if let Ok(rank) = self.frequency_slots.binary_search(&h) {
                added += usize::from(self.escape(q, true, rank));
            }
        }
        if added > 0 {
            return true;
        }
        let mut taken = 0;
        while taken < self.budget && self.cursor < self.ranked.len() {
            let (frequency, rank) = self.ranked[self.cursor];
            self.cursor += 1;
            taken += usize::from(self.escape(q, frequency, rank));
        }
        self.budget *= 2;
        taken > 0
    }
}
