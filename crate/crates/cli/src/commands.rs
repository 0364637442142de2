use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use dualbound::codec::{apply_edits, read_archive, verify_bounds, BoundsCheck};
use dualbound::ingest::{
    format_dims, load_raw, max_abs_error, parse_dims, save_raw_with, synth_field, trial_and_error_tune,
    uniform_quantize_compress, BaseCompressor, DatasetDescriptor, SynthKind, UniformQuantizer,
};
use dualbound::metrics::{
    compare_spectra, max_power_relative_error, max_rfe, power_spectrum, psnr, ssnr, Decibels,
};
use dualbound::pipeline::{correct as run_correction, CorrectionConfig, CorrectionReport};
use dualbound::transform::forward_dft;
use dualbound::{DualBounds, Error, Precision, ScalarField};
use serde::Serialize;

use crate::input::{load, load_paired, resolve_bounds, sidecar_path, ResolvedBounds};
use crate::{
    ApplyArgs, Base, BenchArgs, CliError, CorrectArgs, MetricsArgs, SpectrumArgs, Status, SynthArgs, VerifyArgs,
};

type CmdResult = Result<Status, CliError>;

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_file(path: &Path) -> Result<Vec<u8>, Error> {
    fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn same_shape(a: &ScalarField, b: &ScalarField) -> Result<(), Error> {
    if a.dims() != b.dims() {
        return Err(Error::Validation(format!(
            "shape mismatch: {} vs {}",
            format_dims(a.dims()),
            format_dims(b.dims())
        )));
    }
    Ok(())
}

fn json_line(out: &mut dyn Write, value: &impl Serialize) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
struct CorrectOutput<'a> {
    command: &'static str,
    dims: &'a [usize],
    dtype: Precision,
    base: &'static str,
    bounds: &'a ResolvedBounds,
    archive: String,
    base_payload_bytes: Option<u64>,
    report: &'a CorrectionReport,
}

pub(crate) fn correct(a: &CorrectArgs, out: &mut dyn Write) -> CmdResult {
    let original = load(&a.original, &a.layout, None)?;
    let base = a.base.unwrap_or(if a.decompressed.is_some() { Base::Files } else { Base::Quantizer });
    let (bounds, resolved) = resolve_bounds(&a.bounds, &original)?;
    let (decompressed, base_payload) = match base {
        Base::Files => {
            let path = a
                .decompressed
                .as_ref()
                .ok_or_else(|| Error::Validation("--base files needs --decompressed".into()))?;
            let d = load_paired(path, &a.original, &a.layout, None)?;
            same_shape(&original, &d)?;
            (d, None)
        }
        Base::Quantizer => {
            if a.decompressed.is_some() {
                return Err(Error::Validation("--decompressed cannot be combined with --base quantizer".into()).into());
            }
            let (d, size) = uniform_quantize_compress(&original, resolved.spatial)?;
            if let Some(p) = &a.write_decompressed {
                save_raw_with(&d, p, a.layout.byte_order.into())?;
            }
            (d, Some(size))
        }
    };
    let config = CorrectionConfig {
        m: a.m,
        max_iters: a.max_iters,
    };
    let c = run_correction(&original, &decompressed, &bounds, &config)?;
    write_file(&a.out, &c.archive_bytes)?;
    if let Some(p) = &a.corrected {
        save_raw_with(&c.corrected, p, a.layout.byte_order.into())?;
    }
    let r = &c.report;
    let report = CorrectOutput {
        command: "correct",
        dims: original.dims(),
        dtype: original.precision(),
        base: match base {
            Base::Quantizer => "quantizer",
            Base::Files => "files",
        },
        bounds: &resolved,
        archive: a.out.display().to_string(),
        base_payload_bytes: base_payload,
        report: r,
    };
    if let Some(p) = &a.report {
        write_file(p, &serde_json::to_vec_pretty(&report)?)?;
    }
    if a.json {
        json_line(out, &report)?;
    } else {
        let p = &r.projection;
        writeln!(out, "field        {} {}", format_dims(original.dims()), original.precision())?;
        writeln!(out, "bounds       {resolved}")?;
        writeln!(out, "converged    {}", r.converged)?;
        writeln!(out, "verified     {}", r.verified)?;
        writeln!(out, "iterations   {} ({} checks)", p.iterations, p.checks)?;
        writeln!(out, "active edits {} spatial, {} frequency", p.active_spatial, p.active_frequency)?;
        writeln!(out, "residuals    f {:.3e}, s {:.3e}", p.residual_f, p.residual_s)?;
        writeln!(out, "escapes      {} ({} rounds)", r.escapes, r.escape_rounds)?;
        writeln!(
            out,
            "payload      {} bytes ({:.4}% of the {}-byte field)",
            r.payload_bytes,
            100.0 * r.payload_fraction,
            r.field_bytes
        )?;
        if let Some(b) = base_payload {
            writeln!(out, "base payload {b} bytes")?;
        }
        writeln!(out, "wall time    {:.3} s", r.wall_time.as_secs_f64())?;
        writeln!(out, "archive      {}", a.out.display())?;
    }
    if r.converged && r.verified {
        Ok(Status::Success)
    } else {
        eprintln!(
            "dualbound: bounds not met (converged={}, verified={}); archive written with that status",
            r.converged, r.verified
        );
        Ok(Status::BoundsNotMet)
    }
}

#[derive(Serialize)]
struct CheckSummary {
    ok: bool,
    max_spatial_excess: f64,
    max_freq_excess: f64,
    spatial_violations: usize,
    frequency_violations: usize,
}

impl From<&BoundsCheck> for CheckSummary {
    fn from(c: &BoundsCheck) -> Self {
        Self {
            ok: c.ok,
            max_spatial_excess: c.max_spatial_excess,
            max_freq_excess: c.max_freq_excess,
            spatial_violations: c.spatial_violations.len(),
            frequency_violations: c.frequency_violations.len(),
        }
    }
}

fn print_check(out: &mut dyn Write, c: &CheckSummary) -> std::io::Result<()> {
    writeln!(out, "bounds ok          {}", c.ok)?;
    writeln!(
        out,
        "spatial excess     {:.3e} ({} violations)",
        c.max_spatial_excess, c.spatial_violations
    )?;
    writeln!(
        out,
        "frequency excess   {:.3e} ({} violations)",
        c.max_freq_excess, c.frequency_violations
    )
}

#[derive(Serialize)]
struct ApplyOutput {
    command: &'static str,
    dims: Vec<usize>,
    dtype: Precision,
    archive_converged: bool,
    archive_verified: bool,
    out: String,
    check: Option<CheckSummary>,
}

pub(crate) fn apply(a: &ApplyArgs, out: &mut dyn Write) -> CmdResult {
    let archive = read_archive(&read_file(&a.archive)?)?;
    let dims = match &a.dims {
        Some(s) => {
            let d = parse_dims(s)?;
            if d != archive.dims() {
                return Err(Error::Validation(format!(
                    "field dims {} do not match archive dims {}",
                    format_dims(&d),
                    format_dims(archive.dims())
                ))
                .into());
            }
            d
        }
        None => archive.dims().to_vec(),
    };
    let precision = a.dtype.map(Precision::from).unwrap_or(archive.precision);
    let layout = |path: &Path| {
        let mut d = DatasetDescriptor::new(path, dims.clone(), precision);
        d.byte_order = a.byte_order.into();
        d
    };
    let decompressed = load_raw(&layout(&a.decompressed))?;
    let out_precision = a.out_dtype.map(Precision::from).unwrap_or(precision);
    let corrected = apply_edits(&decompressed, &archive.decode_edits())?.cast(out_precision)?;
    save_raw_with(&corrected, &a.out, a.byte_order.into())?;
    if !archive.status.feasible() {
        eprintln!(
            "dualbound: archive does not claim feasibility (converged={}, verified={})",
            archive.status.converged, archive.status.verified
        );
    }
    let check = match &a.original {
        Some(p) => {
            let original = load_raw(&layout(p))?;
            Some(CheckSummary::from(&verify_bounds(&original, &corrected, archive.bounds())?))
        }
        None => None,
    };
    let ok = check.as_ref().is_none_or(|c| c.ok);
    let report = ApplyOutput {
        command: "apply",
        dims,
        dtype: out_precision,
        archive_converged: archive.status.converged,
        archive_verified: archive.status.verified,
        out: a.out.display().to_string(),
        check,
    };
    if a.json {
        json_line(out, &report)?;
    } else {
        writeln!(out, "wrote              {} ({} {})", report.out, format_dims(&report.dims), out_precision)?;
        if let Some(c) = &report.check {
            print_check(out, c)?;
        }
    }
    Ok(if ok { Status::Success } else { Status::BoundsNotMet })
}

pub(crate) fn verify(a: &VerifyArgs, out: &mut dyn Write) -> CmdResult {
    let original = load(&a.original, &a.layout, None)?;
    let corrected = load_paired(&a.corrected, &a.original, &a.layout, a.corrected_dtype)?;
    same_shape(&original, &corrected)?;
    let bounds: DualBounds = match &a.archive {
        Some(p) => {
            let archive = read_archive(&read_file(p)?)?;
            if archive.dims() != original.dims() {
                return Err(Error::Validation(format!(
                    "archive dims {} do not match field dims {}",
                    format_dims(archive.dims()),
                    format_dims(original.dims())
                ))
                .into());
            }
            archive.bounds().clone()
        }
        None => resolve_bounds(&a.bounds, &original)?.0,
    };
    let check = CheckSummary::from(&verify_bounds(&original, &corrected, &bounds)?);
    if a.json {
        json_line(out, &check)?;
    } else {
        print_check(out, &check)?;
    }
    Ok(if check.ok { Status::Success } else { Status::BoundsNotMet })
}

#[derive(Serialize)]
struct MetricsOutput {
    psnr_db: Decibels,
    ssnr_db: Decibels,
    max_spatial_error: f64,
    max_rfe: f64,
}

pub(crate) fn metrics(a: &MetricsArgs, out: &mut dyn Write) -> CmdResult {
    let original = load(&a.original, &a.layout, None)?;
    let reconstructed = load_paired(&a.reconstructed, &a.original, &a.layout, a.reconstructed_dtype)?;
    same_shape(&original, &reconstructed)?;
    let m = field_metrics(&original, &reconstructed)?;
    if let Some(p) = &a.csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["metric", "value"])?;
        for (k, v) in metric_rows(&m) {
            w.write_record([k, &v])?;
        }
        write_file(p, &w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?)?;
    }
    if a.json {
        json_line(out, &m)?;
    } else {
        for (k, v) in metric_rows(&m) {
            writeln!(out, "{k:<18} {v}")?;
        }
    }
    Ok(Status::Success)
}

fn metric_rows(m: &MetricsOutput) -> [(&'static str, String); 4] {
    [
        ("psnr_db", m.psnr_db.to_string()),
        ("ssnr_db", m.ssnr_db.to_string()),
        ("max_spatial_error", format!("{:e}", m.max_spatial_error)),
        ("max_rfe", format!("{:e}", m.max_rfe)),
    ]
}

fn field_metrics(original: &ScalarField, reconstructed: &ScalarField) -> Result<MetricsOutput, Error> {
    let x = forward_dft(original)?;
    let y = forward_dft(reconstructed)?;
    let error = ScalarField::new(
        original.dims().to_vec(),
        reconstructed.values().iter().zip(original.values()).map(|(r, o)| r - o).collect(),
        Precision::F64,
    )?;
    Ok(MetricsOutput {
        psnr_db: psnr(original, reconstructed)?,
        ssnr_db: ssnr(&x, &y)?,
        max_spatial_error: max_abs_error(original, reconstructed),
        max_rfe: max_rfe(&forward_dft(&error)?, &x)?,
    })
}

pub(crate) fn spectrum(a: &SpectrumArgs, out: &mut dyn Write) -> CmdResult {
    let original = load(&a.original, &a.layout, None)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    match &a.reconstructed {
        None => {
            let ps = power_spectrum(&original)?;
            w.write_record(["k", "P_k", "count"])?;
            for ((k, p), c) in ps.k_bins.iter().zip(&ps.power).zip(&ps.counts) {
                w.write_record([k.to_string(), format!("{p:e}"), c.to_string()])?;
            }
            eprintln!("normalization {}; {} shells", ps.normalization, ps.len());
        }
        Some(path) => {
            let reconstructed = load_paired(path, &a.original, &a.layout, a.reconstructed_dtype)?;
            same_shape(&original, &reconstructed)?;
            let ps = power_spectrum(&original)?;
            let rows = compare_spectra(&original, &reconstructed)?;
            w.write_record(["k", "P_k", "count", "P_k_reconstructed", "ratio"])?;
            for (r, c) in rows.iter().zip(&ps.counts) {
                w.write_record([
                    r.k.to_string(),
                    format!("{:e}", r.original),
                    c.to_string(),
                    format!("{:e}", r.reconstructed),
                    r.ratio.map_or(String::new(), |q| format!("{q:e}")),
                ])?;
            }
            eprintln!(
                "normalization {}; {} shells; max relative power error {:e}",
                ps.normalization,
                ps.len(),
                max_power_relative_error(&rows)
            );
        }
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    match &a.out {
        Some(p) => write_file(p, &bytes)?,
        None => out.write_all(&bytes)?,
    }
    Ok(Status::Success)
}

pub(crate) fn synth(a: &SynthArgs, out: &mut dyn Write) -> CmdResult {
    let kind: SynthKind = a.kind.parse()?;
    let dims = parse_dims(&a.dims)?;
    let precision = Precision::from(a.dtype);
    let field = synth_field(kind, &dims, a.seed)?.cast(precision)?;
    save_raw_with(&field, &a.out, a.byte_order.into())?;
    if a.sidecar {
        let mut d = DatasetDescriptor::new(
            a.out.file_name().map(Path::new).unwrap_or(&a.out),
            dims.clone(),
            precision,
        );
        d.byte_order = a.byte_order.into();
        write_file(&sidecar_path(&a.out), d.to_sidecar().as_bytes())?;
    }
    writeln!(out, "wrote {} ({kind}, {} {precision}, seed {})", a.out.display(), format_dims(&dims), a.seed)?;
    Ok(Status::Success)
}

/// One leg of the comparison table.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub leg: &'static str,
    pub status: String,
    pub error_bound: Option<f64>,
    pub payload_bytes: Option<u64>,
    pub compression_ratio: Option<f64>,
    pub psnr_db: Option<Decibels>,
    pub ssnr_db: Option<Decibels>,
    pub max_rfe: Option<f64>,
    pub iterations: Option<usize>,
    pub wall_time_s: f64,
}

impl BenchRow {
    fn failed(leg: &'static str, status: String, wall_time_s: f64) -> Self {
        Self {
            leg,
            status,
            error_bound: None,
            payload_bytes: None,
            compression_ratio: None,
            psnr_db: None,
            ssnr_db: None,
            max_rfe: None,
            iterations: None,
            wall_time_s,
        }
    }

    fn record(&self) -> Vec<String> {
        let opt = |v: Option<String>| v.unwrap_or_default();
        vec![
            self.leg.to_string(),
            self.status.clone(),
            opt(self.error_bound.map(|v| format!("{v:e}"))),
            opt(self.payload_bytes.map(|v| v.to_string())),
            opt(self.compression_ratio.map(|v| format!("{v:.4}"))),
            opt(self.psnr_db.map(|v| v.to_string())),
            opt(self.ssnr_db.map(|v| v.to_string())),
            opt(self.max_rfe.map(|v| format!("{v:e}"))),
            opt(self.iterations.map(|v| v.to_string())),
            format!("{:.4}", self.wall_time_s),
        ]
    }
}

const BENCH_HEADER: [&str; 10] = [
    "leg",
    "status",
    "error_bound",
    "payload_bytes",
    "compression_ratio",
    "psnr_db",
    "ssnr_db",
    "max_rfe",
    "iterations",
    "wall_time_s",
];

fn measured_row(
    leg: &'static str,
    original: &ScalarField,
    reconstructed: &ScalarField,
    error_bound: f64,
    payload: Option<u64>,
    iterations: Option<usize>,
    wall: f64,
) -> Result<BenchRow, Error> {
    let m = field_metrics(original, reconstructed)?;
    let field_bytes = (original.len() * original.precision().bytes_per_sample()) as f64;
    Ok(BenchRow {
        leg,
        status: "ok".into(),
        error_bound: Some(error_bound),
        payload_bytes: payload,
        compression_ratio: payload.map(|p| field_bytes / p.max(1) as f64),
        psnr_db: Some(m.psnr_db),
        ssnr_db: Some(m.ssnr_db),
        max_rfe: Some(m.max_rfe),
        iterations,
        wall_time_s: wall,
    })
}

pub(crate) fn bench(a: &BenchArgs, out: &mut dyn Write) -> CmdResult {
    let original = match (&a.original, &a.synth) {
        (Some(p), None) => load(p, &a.layout, None)?,
        (None, Some(kind)) => {
            let dims = a
                .layout
                .dims
                .as_deref()
                .ok_or_else(|| Error::Validation("--synth needs --dims".into()))?;
            synth_field(kind.parse()?, &parse_dims(dims)?, a.seed)?.cast(a.layout.dtype.into())?
        }
        _ => return Err(Error::Validation("one of --original and --synth is required".into()).into()),
    };
    let (bounds, resolved) = resolve_bounds(&a.bounds, &original)?;
    let e = resolved.spatial;
    let mut rows = Vec::new();

    // Leg 1: base compressor alone.
    let t = Instant::now();
    let (decompressed, base_payload) = match a.base {
        Base::Quantizer => {
            let o = UniformQuantizer.compress(&original, e)?;
            (o.decompressed, Some(o.payload_bytes))
        }
        Base::Files => {
            let p = a
                .decompressed
                .as_ref()
                .ok_or_else(|| Error::Validation("--base files needs --decompressed".into()))?;
            let d = match &a.original {
                Some(reference) => load_paired(p, reference, &a.layout, None)?,
                None => load(p, &a.layout, None)?,
            };
            same_shape(&original, &d)?;
            (d, None)
        }
    };
    let base_wall = t.elapsed().as_secs_f64();
    rows.push(measured_row("base", &original, &decompressed, e, base_payload, None, base_wall)?);

    // Leg 2: tighten E until the frequency target holds.
    let t = Instant::now();
    match a.base {
        Base::Files => rows.push(BenchRow::failed("tuned", "unavailable".into(), 0.0)),
        Base::Quantizer => {
            match trial_and_error_tune(&original, bounds.frequency(), &UniformQuantizer, e, a.shrink_factor) {
                Ok(tune) => {
                    let wall = t.elapsed().as_secs_f64();
                    rows.push(measured_row(
                        "tuned",
                        &original,
                        &tune.output.decompressed,
                        tune.error_bound,
                        Some(tune.output.payload_bytes),
                        Some(tune.trace.len()),
                        wall,
                    )?);
                }
                Err(Error::TuningFailed { trace }) => {
                    rows.push(BenchRow::failed(
                        "tuned",
                        format!("failed after {} steps", trace.len()),
                        t.elapsed().as_secs_f64(),
                    ));
                }
                Err(other) => return Err(other.into()),
            }
        }
    }

    // Leg 3: base plus correction; an archive without edits costs nothing.
    let t = Instant::now();
    let config = CorrectionConfig {
        m: a.m,
        max_iters: a.max_iters,
    };
    let c = run_correction(&original, &decompressed, &bounds, &config)?;
    let wall = base_wall + t.elapsed().as_secs_f64();
    let edits = &c.archive.edits;
    let edit_bytes = if edits.spatial_flags.count_ones() + edits.frequency_flags.count_ones() == 0 {
        0
    } else {
        c.report.payload_bytes
    };
    let mut row = measured_row(
        "corrected",
        &original,
        &c.corrected,
        e,
        base_payload.map(|b| b + edit_bytes),
        Some(c.report.projection.iterations),
        wall,
    )?;
    if !(c.report.converged && c.report.verified) {
        row.status = format!("bounds not met (converged={}, verified={})", c.report.converged, c.report.verified);
    }
    rows.push(row);

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(BENCH_HEADER)?;
    for r in &rows {
        w.write_record(r.record())?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    match &a.out {
        Some(p) => write_file(p, &bytes)?,
        None => out.write_all(&bytes)?,
    }
    Ok(Status::Success)
}
