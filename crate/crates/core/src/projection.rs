//! Dual-domain feasibility: the spatial box (s-cube), the frequency box
//! (f-cube), their projections, and the alternating projection loop.

use std::time::{Duration, Instant};

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::shape::{mirror_index, HalfSpectrum};
use crate::transform::{Complex64, ComplexSpectrum, Precision, ScalarField, Transformer};

/// Default cap on projection rounds.
pub const DEFAULT_MAX_ITERS: usize = 1000;

/// Relative slack allowed on the initial error before the spatial
/// precondition fires.
pub const PRECONDITION_SLACK: f64 = 1.0 / (1u64 << 20) as f64;

#[derive(Clone, Debug, PartialEq)]
pub enum SpatialBound {
    Global(f64),
    PerPoint(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum FrequencyBound {
    Global(f64),
    /// Separate bounds on the real and imaginary part of every coefficient of
    /// the full spectrum.
    PerComponent { re: Vec<f64>, im: Vec<f64> },
}

fn check_positive(what: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        Some(i) => Err(Error::validation(format!(
            "{what} bound entry {i} must be positive and finite, got {}",
            values[i]
        ))),
        None => Ok(()),
    }
}

/// Spatial bound `E` and frequency bound `Delta`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualBounds {
    spatial: SpatialBound,
    frequency: FrequencyBound,
}

impl DualBounds {
    pub fn global(spatial: f64, frequency: f64) -> Result<Self> {
        check_positive("spatial", &[spatial])?;
        check_positive("frequency", &[frequency])?;
        Ok(Self {
            spatial: SpatialBound::Global(spatial),
            frequency: FrequencyBound::Global(frequency),
        })
    }

    /// Validates positivity, lengths against `dims`, and Hermitian
    /// consistency of per-component frequency bounds.
    pub fn new(spatial: SpatialBound, frequency: FrequencyBound, dims: &[usize]) -> Result<Self> {
        let n: usize = dims.iter().product();
        match &spatial {
            SpatialBound::Global(e) => check_positive("spatial", &[*e])?,
            SpatialBound::PerPoint(v) => {
                if v.len() != n {
                    return Err(Error::validation(format!(
                        "per-point spatial bounds have {} entries for {n} samples",
                        v.len()
                    )));
                }
                check_positive("spatial", v)?;
            }
        }
        match &frequency {
            FrequencyBound::Global(d) => check_positive("frequency", &[*d])?,
            FrequencyBound::PerComponent { re, im } => {
                if re.len() != n || im.len() != n {
                    return Err(Error::validation(format!(
                        "per-component frequency bounds have {}/{} entries for {n} coefficients",
                        re.len(),
                        im.len()
                    )));
                }
                check_positive("frequency (real)", re)?;
                check_positive("frequency (imaginary)", im)?;
                for k in 0..n {
                    let m = mirror_index(dims, k);
                    if re[k] != re[m] || im[k] != im[m] {
                        return Err(Error::validation(format!(
                            "frequency bounds at {k} and its conjugate {m} differ"
                        )));
                    }
                }
            }
        }
        Ok(Self { spatial, frequency })
    }

    pub fn spatial(&self) -> &SpatialBound {
        &self.spatial
    }

    pub fn frequency(&self) -> &FrequencyBound {
        &self.frequency
    }

    #[inline]
    pub fn spatial_at(&self, n: usize) -> f64 {
        match &self.spatial {
            SpatialBound::Global(e) => *e,
            SpatialBound::PerPoint(v) => v[n],
        }
    }

    /// `(Delta_re, Delta_im)` at coefficient `k`.
    #[inline]
    pub fn frequency_at(&self, k: usize) -> (f64, f64) {
        match &self.frequency {
            FrequencyBound::Global(d) => (*d, *d),
            FrequencyBound::PerComponent { re, im } => (re[k], im[k]),
        }
    }

    /// Fails unless per-point/per-component vectors have `len` entries.
    pub fn check_len(&self, len: usize) -> Result<()> {
        if let SpatialBound::PerPoint(v) = &self.spatial {
            if v.len() != len {
                return Err(Error::validation(format!(
                    "spatial bounds cover {} samples, field has {len}",
                    v.len()
                )));
            }
        }
        if let FrequencyBound::PerComponent { re, .. } = &self.frequency {
            if re.len() != len {
                return Err(Error::validation(format!(
                    "frequency bounds cover {} coefficients, spectrum has {len}",
                    re.len()
                )));
            }
        }
        Ok(())
    }

    /// Every bound entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let spatial = match &self.spatial {
            SpatialBound::Global(e) => SpatialBound::Global(e * factor),
            SpatialBound::PerPoint(v) => SpatialBound::PerPoint(v.iter().map(|e| e * factor).collect()),
        };
        let frequency = match &self.frequency {
            FrequencyBound::Global(d) => FrequencyBound::Global(d * factor),
            FrequencyBound::PerComponent { re, im } => FrequencyBound::PerComponent {
                re: re.iter().map(|d| d * factor).collect(),
                im: im.iter().map(|d| d * factor).collect(),
            },
        };
        Self { spatial, frequency }
    }

    /// Every spatial entry reduced by `spatial_by` and every frequency entry
    /// by `frequency_by`, but never below 1/256 of its value.
    pub fn tightened(&self, spatial_by: f64, frequency_by: f64) -> Self {
        let cut = |b: f64, by: f64| (b - by).max(b / 256.0);
        let spatial = match &self.spatial {
            SpatialBound::Global(e) => SpatialBound::Global(cut(*e, spatial_by)),
            SpatialBound::PerPoint(v) => SpatialBound::PerPoint(v.iter().map(|&e| cut(e, spatial_by)).collect()),
        };
        let frequency = match &self.frequency {
            FrequencyBound::Global(d) => FrequencyBound::Global(cut(*d, frequency_by)),
            FrequencyBound::PerComponent { re, im } => FrequencyBound::PerComponent {
                re: re.iter().map(|&d| cut(d, frequency_by)).collect(),
                im: im.iter().map(|&d| cut(d, frequency_by)).collect(),
            },
        };
        Self { spatial, frequency }
    }

    pub fn with_frequency(&self, frequency: FrequencyBound, dims: &[usize]) -> Result<Self> {
        Self::new(self.spatial.clone(), frequency, dims)
    }
}

/// Bounds multiplied by `1 - 2^-m`, leaving room for `m`-bit quantization of
/// the edits.
pub fn shrink_bounds(bounds: &DualBounds, m: u8) -> Result<DualBounds> {
    if !(1..=24).contains(&m) {
        return Err(Error::validation(format!("code length m={m} outside 1..=24")));
    }
    Ok(bounds.scaled(shrink_factor(m)))
}

pub(crate) fn shrink_factor(m: u8) -> f64 {
    1.0 - (-(m as f64)).exp2()
}

/// `decompressed - original`, elementwise.
pub fn compute_error(original: &ScalarField, decompressed: &ScalarField) -> Result<ScalarField> {
    if original.dims() != decompressed.dims() {
        return Err(Error::validation(format!(
            "shape mismatch: original {:?}, decompressed {:?}",
            original.dims(),
            decompressed.dims()
        )));
    }
    if original.precision() != decompressed.precision() {
        return Err(Error::validation(format!(
            "precision mismatch: original {}, decompressed {}",
            original.precision(),
            decompressed.precision()
        )));
    }
    let values = decompressed
        .values()
        .iter()
        .zip(original.values())
        .map(|(d, o)| d - o)
        .collect();
    Ok(ScalarField::from_parts(
        original.dims().to_vec(),
        values,
        original.precision(),
    ))
}

/// Outcome of testing a spectrum against the f-cube.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceCheck {
    pub satisfied: bool,
    pub violations: usize,
    /// Largest `|part| - bound` over all coefficients, 0 when satisfied.
    pub max_excess: f64,
    /// Euclidean distance from the spatial error to the f-cube,
    /// `sqrt(sum |delta - clip(delta)|^2 / N)`.
    pub distance: f64,
}

/// Round-off allowance of the in-loop checks, relative to each bound.
const LOOP_RTOL: f64 = 1.0 / (1u64 << 40) as f64;
/// Round-off allowance of the in-loop f-cube check, relative to the largest
/// coefficient of the spectrum being checked (FFT round-off scale).
const LOOP_SPECTRUM_RTOL: f64 = 1.0 / (1u64 << 44) as f64;

/// With `strict = false`, excesses within FFT round-off are ignored so an
/// iterate clipped onto the boundary is not re-flagged after a transform
/// round trip.
fn fcube_check(delta: &[Complex64], bounds: &DualBounds, strict: bool) -> ConvergenceCheck {
    let floor = if strict {
        0.0
    } else {
        LOOP_SPECTRUM_RTOL * delta.iter().map(|d| d.re.abs().max(d.im.abs())).fold(0.0, f64::max)
    };
    let rtol = if strict { 0.0 } else { LOOP_RTOL };
    let mut violations = 0;
    let mut max_excess = 0.0f64;
    let mut sq = 0.0;
    for (k, d) in delta.iter().enumerate() {
        let (br, bi) = bounds.frequency_at(k);
        let slack = br.max(bi) * rtol + floor;
        let er = d.re.abs() - br - slack;
        let ei = d.im.abs() - bi - slack;
        if er > 0.0 || ei > 0.0 {
            violations += 1;
            max_excess = max_excess.max(er).max(ei);
            sq += er.max(0.0).powi(2) + ei.max(0.0).powi(2);
        }
    }
    ConvergenceCheck {
        satisfied: violations == 0,
        violations,
        max_excess,
        distance: (sq / delta.len().max(1) as f64).sqrt(),
    }
}

/// Spatial counterpart of [`fcube_check`].
pub(crate) fn scube_check(epsilon: &[f64], bounds: &DualBounds) -> ConvergenceCheck {
    let mut violations = 0;
    let mut max_excess = 0.0f64;
    let mut sq = 0.0;
    for (n, e) in epsilon.iter().enumerate() {
        let excess = e.abs() - bounds.spatial_at(n);
        if excess > 0.0 {
            violations += 1;
            max_excess = max_excess.max(excess);
            sq += excess * excess;
        }
    }
    ConvergenceCheck {
        satisfied: violations == 0,
        violations,
        max_excess,
        distance: sq.sqrt(),
    }
}

/// Whether every coefficient of `delta` lies inside the f-cube.
pub fn check_convergence(delta: &ComplexSpectrum, bounds: &DualBounds) -> Result<ConvergenceCheck> {
    bounds.check_len(delta.len())?;
    Ok(fcube_check(delta.values(), bounds, true))
}

fn clip_spectrum(values: &mut [Complex64], bounds: &DualBounds) -> Vec<Complex64> {
    values
        .iter_mut()
        .enumerate()
        .map(|(k, d)| {
            let (br, bi) = bounds.frequency_at(k);
            let clipped = Complex64::new(d.re.clamp(-br, br), d.im.clamp(-bi, bi));
            let shift = clipped - *d;
            *d = clipped;
            shift
        })
        .collect()
}

fn clip_samples(values: &mut [f64], bounds: &DualBounds) -> Vec<f64> {
    values
        .iter_mut()
        .enumerate()
        .map(|(n, e)| {
            let b = bounds.spatial_at(n);
            let clipped = e.clamp(-b, b);
            let shift = clipped - *e;
            *e = clipped;
            shift
        })
        .collect()
}

/// Nearest point of the f-cube: real and imaginary parts clamped
/// independently. Returns the clipped spectrum and the displacement
/// `clipped - delta`.
pub fn project_onto_fcube(
    delta: &ComplexSpectrum,
    bounds: &DualBounds,
) -> Result<(ComplexSpectrum, Vec<Complex64>)> {
    bounds.check_len(delta.len())?;
    let mut values = delta.values().to_vec();
    let shift = clip_spectrum(&mut values, bounds);
    Ok((
        ComplexSpectrum::from_parts(delta.dims().to_vec(), values, delta.precision()),
        shift,
    ))
}

/// Nearest point of the s-cube, with the displacement `clipped - epsilon`.
pub fn project_onto_scube(
    epsilon: &ScalarField,
    bounds: &DualBounds,
) -> Result<(ScalarField, Vec<f64>)> {
    bounds.check_len(epsilon.len())?;
    let mut values = epsilon.values().to_vec();
    let shift = clip_samples(&mut values, bounds);
    Ok((
        ScalarField::from_parts(epsilon.dims().to_vec(), values, epsilon.precision()),
        shift,
    ))
}

/// Cumulative displacement of the error along each basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseEdits {
    pub dims: Vec<usize>,
    pub spatial: Vec<f64>,
    /// Full spectrum; Hermitian when produced from a real error field.
    pub frequency: Vec<Complex64>,
}

impl DenseEdits {
    pub fn zeros(dims: &[usize]) -> Self {
        let n = dims.iter().product();
        Self {
            dims: dims.to_vec(),
            spatial: vec![0.0; n],
            frequency: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn active_spatial(&self) -> usize {
        self.spatial.iter().filter(|v| **v != 0.0).count()
    }

    /// Nonzero entries of the stored (half) spectrum.
    pub fn active_frequency(&self) -> usize {
        let half = HalfSpectrum::new(&self.dims);
        (0..half.len())
            .filter(|&h| self.frequency[half.full_index(h)] != Complex64::new(0.0, 0.0))
            .count()
    }
}

pub(crate) fn serialize_secs<S: Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectionReport {
    /// Projection rounds performed, reported as at least 1.
    pub iterations: usize,
    /// Convergence checks performed (one per forward transform).
    pub checks: usize,
    pub active_spatial: usize,
    pub active_frequency: usize,
    pub converged: bool,
    pub residual_f: f64,
    pub residual_s: f64,
    #[serde(rename = "wall_time_s", serialize_with = "serialize_secs")]
    pub wall_time: Duration,
    /// f-cube `max_excess` at every check.
    pub excess_history: Vec<f64>,
    /// f-cube Euclidean distance at every check.
    pub distance_history: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ProjectionOutcome {
    pub edits: DenseEdits,
    pub final_epsilon: ScalarField,
    pub report: ProjectionReport,
}

/// Settings for [`AlternatingProjection::run`].
#[derive(Clone, Copy, Debug)]
pub struct AlternatingProjection {
    pub max_iters: usize,
    /// Relative amount by which the initial error may exceed the spatial
    /// bound before [`Error::Precondition`] is raised.
    pub precondition_slack: f64,
}

impl Default for AlternatingProjection {
    fn default() -> Self {
        Self {
            max_iters: DEFAULT_MAX_ITERS,
            precondition_slack: PRECONDITION_SLACK,
        }
    }
}

impl AlternatingProjection {
    pub fn new(max_iters: usize) -> Self {
        Self {
            max_iters,
            ..Self::default()
        }
    }

    /// Alternate f-cube and s-cube projections starting from `epsilon0`
    /// until the error lies in both cubes or `max_iters` rounds have run.
    ///
    /// Each round: `delta = FFT(eps)`, clip `delta` to the f-cube and record
    /// the shift as frequency edits, `eps = IFFT(delta)`, clip `eps` to the
    /// s-cube and record the shift as spatial edits. Non-convergence is
    /// reported, not raised.
    pub fn run(&self, epsilon0: &ScalarField, bounds: &DualBounds) -> Result<ProjectionOutcome> {
        if self.max_iters == 0 {
            return Err(Error::validation("max_iters must be at least 1"));
        }
        bounds.check_len(epsilon0.len())?;
        for (n, &e) in epsilon0.values().iter().enumerate() {
            let bound = bounds.spatial_at(n);
            if e.abs() > bound * (1.0 + self.precondition_slack) {
                return Err(Error::Precondition {
                    index: n,
                    value: e,
                    bound,
                });
            }
        }

        let start = Instant::now();
        let dims = epsilon0.dims().to_vec();
        let precision: Precision = epsilon0.precision();
        let transformer = Transformer::new(&dims)?;
        let mut edits = DenseEdits::zeros(&dims);
        let mut eps = epsilon0.values().to_vec();
        let mut rounds = 0;
        let mut checks = 0;
        let mut excess_history = Vec::new();
        let mut distance_history = Vec::new();

        let (converged, f_check, s_check) = loop {
            let mut delta = transformer.forward_real(&eps);
            checks += 1;
            let f_check = fcube_check(&delta, bounds, false);
            let s_check = scube_check(&eps, bounds);
            excess_history.push(f_check.max_excess);
            distance_history.push(f_check.distance);
            if f_check.satisfied && s_check.satisfied {
                break (true, f_check, s_check);
            }
            if rounds == self.max_iters {
                break (false, f_check, s_check);
            }
            rounds += 1;

            let f_shift = clip_spectrum(&mut delta, bounds);
            for (acc, s) in edits.frequency.iter_mut().zip(&f_shift) {
                *acc += s;
            }
            eps = transformer.inverse_real(delta, precision)?;
            let s_shift = clip_samples(&mut eps, bounds);
            for (acc, s) in edits.spatial.iter_mut().zip(&s_shift) {
                *acc += s;
            }
        };

        let report = ProjectionReport {
            iterations: rounds.max(1),
            checks,
            active_spatial: edits.active_spatial(),
            active_frequency: edits.active_frequency(),
            converged,
            residual_f: f_check.max_excess,
            residual_s: s_check.max_excess,
            wall_time: start.elapsed(),
            excess_history,
            distance_history,
        };
        Ok(ProjectionOutcome {
            final_epsilon: ScalarField::from_parts(dims, eps, precision),
            edits,
            report,
        })
    }
}

/// [`AlternatingProjection::run`] with default slack.
pub fn alternating_projection(
    epsilon0: &ScalarField,
    bounds_working: &DualBounds,
    max_iters: usize,
) -> Result<ProjectionOutcome> {
    AlternatingProjection::new(max_iters).run(epsilon0, bounds_working)
}
