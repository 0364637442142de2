//! Field and spectrum types plus the multi-dimensional DFT.
//!
//! The forward transform is unscaled, `X_k = sum_n x_n exp(-2 pi i k n / N)`,
//! applied per axis; the inverse carries the `1 / prod(dims)` factor. All
//! frequency bounds elsewhere in the crate are interpreted against these
//! unscaled coefficients.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

pub use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::shape::{element_count, mirror_table, strides};

/// Largest field accepted by [`brute_force_dft`].
pub const ORACLE_CAP: usize = 4096;

/// Storage precision of a field. Samples are always held as `f64` in memory;
/// the tag controls file I/O and round-off tolerances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn bytes_per_sample(self) -> usize {
        match self {
            Precision::F32 => 4,
            Precision::F64 => 8,
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Precision::F32 => 0,
            Precision::F64 => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Precision::F32),
            1 => Some(Precision::F64),
            _ => None,
        }
    }

    /// Relative bound on the imaginary residue left by an inverse transform of
    /// a Hermitian spectrum.
    pub fn residue_tolerance(self) -> f64 {
        match self {
            Precision::F32 => 1e-6,
            Precision::F64 => 1e-10,
        }
    }

    /// Round a sample to what this precision can store.
    pub fn represent(self, value: f64) -> f64 {
        match self {
            Precision::F32 => value as f32 as f64,
            Precision::F64 => value,
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f32" | "float32" | "float" => Ok(Precision::F32),
            "f64" | "float64" | "double" => Ok(Precision::F64),
            other => Err(Error::validation(format!("unknown dtype `{other}`"))),
        }
    }
}

impl std::fmt::Display for Precision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        })
    }
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.len() > 3 {
        return Err(Error::validation(format!(
            "fields must have 1 to 3 axes, got {}",
            dims.len()
        )));
    }
    Ok(())
}

/// A real sample grid in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    dims: Vec<usize>,
    values: Vec<f64>,
    precision: Precision,
}

impl ScalarField {
    pub fn new(dims: Vec<usize>, values: Vec<f64>, precision: Precision) -> Result<Self> {
        validate_dims(&dims)?;
        let expected = element_count(&dims);
        if expected != values.len() {
            return Err(Error::validation(format!(
                "dims {dims:?} describe {expected} samples but {} were given",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "sample {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self {
            dims,
            values,
            precision,
        })
    }

    pub fn from_f64(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        Self::new(dims, values, Precision::F64)
    }

    /// Same shape and precision as `self`, new samples.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.dims.clone(), values, self.precision)
    }

    /// Samples rounded to `precision`, tagged with it. Fails if a sample
    /// overflows the target precision.
    pub fn cast(&self, precision: Precision) -> Result<Self> {
        Self::new(
            self.dims.clone(),
            self.values.iter().map(|&v| precision.represent(v)).collect(),
            precision,
        )
    }

    pub(crate) fn from_parts(dims: Vec<usize>, values: Vec<f64>, precision: Precision) -> Self {
        debug_assert_eq!(element_count(&dims), values.len());
        Self {
            dims,
            values,
            precision,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Minimum and maximum sample, `None` for an empty field.
    pub fn value_range(&self) -> Option<(f64, f64)> {
        self.values.iter().fold(None, |acc, &v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }
}

/// Normalization convention carried by every [`ComplexSpectrum`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    /// No factor on the forward transform, `1/N` on the inverse.
    ForwardUnscaled,
}

/// The full (not half) complex spectrum of a field.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSpectrum {
    dims: Vec<usize>,
    values: Vec<Complex64>,
    precision: Precision,
}

impl ComplexSpectrum {
    pub fn new(dims: Vec<usize>, values: Vec<Complex64>, precision: Precision) -> Result<Self> {
        validate_dims(&dims)?;
        let expected = element_count(&dims);
        if expected != values.len() {
            return Err(Error::validation(format!(
                "dims {dims:?} describe {expected} coefficients but {} were given",
                values.len()
            )));
        }
        Ok(Self {
            dims,
            values,
            precision,
        })
    }

    pub(crate) fn from_parts(dims: Vec<usize>, values: Vec<Complex64>, precision: Precision) -> Self {
        debug_assert_eq!(element_count(&dims), values.len());
        Self {
            dims,
            values,
            precision,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn normalization(&self) -> Normalization {
        Normalization::ForwardUnscaled
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest coefficient magnitude (0 for an empty spectrum).
    pub fn max_magnitude(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Cached per-axis FFT plans for one grid shape.
///
/// The projection loop transforms the same shape hundreds of times, so plans
/// and the conjugate-index table are built once.
pub struct Transformer {
    dims: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    mirror: Vec<usize>,
}

impl std::fmt::Debug for Transformer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transformer").field("dims", &self.dims).finish()
    }
}

impl Transformer {
    pub fn new(dims: &[usize]) -> Result<Self> {
        validate_dims(dims)?;
        let mut planner = FftPlanner::<f64>::new();
        let forward = dims.iter().map(|&n| planner.plan_fft_forward(n.max(1))).collect();
        let inverse = dims.iter().map(|&n| planner.plan_fft_inverse(n.max(1))).collect();
        Ok(Self {
            dims: dims.to_vec(),
            forward,
            inverse,
            mirror: mirror_table(dims),
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// `(dims - k) mod dims` for every flat index `k`.
    pub fn mirror(&self) -> &[usize] {
        &self.mirror
    }

    fn check_dims(&self, dims: &[usize]) -> Result<()> {
        if dims != self.dims.as_slice() {
            return Err(Error::validation(format!(
                "transform planned for {:?} but given {:?}",
                self.dims, dims
            )));
        }
        Ok(())
    }

    pub fn forward(&self, field: &ScalarField) -> Result<ComplexSpectrum> {
        self.check_dims(field.dims())?;
        let values = self.forward_real(field.values());
        Ok(ComplexSpectrum::from_parts(
            self.dims.clone(),
            values,
            field.precision(),
        ))
    }

    /// Forward transform of real samples. The result is made exactly
    /// Hermitian by averaging each conjugate pair, which removes the
    /// round-off asymmetry of a complex FFT on real input.
    pub fn forward_real(&self, samples: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        transform_axes(&mut buf, &self.dims, &self.forward);
        for k in 0..buf.len() {
            let m = self.mirror[k];
            if m == k {
                buf[k].im = 0.0;
            } else if k < m {
                let avg = (buf[k] + buf[m].conj()) * 0.5;
                buf[k] = avg;
                buf[m] = avg.conj();
            }
        }
        buf
    }

    pub fn inverse(&self, spectrum: &ComplexSpectrum) -> Result<ScalarField> {
        self.check_dims(spectrum.dims())?;
        let values = self.inverse_real(spectrum.values().to_vec(), spectrum.precision())?;
        Ok(ScalarField::from_parts(
            self.dims.clone(),
            values,
            spectrum.precision(),
        ))
    }

    /// Inverse transform of a spectrum that is expected to be Hermitian; the
    /// imaginary residue is checked against the precision's tolerance and then
    /// discarded.
    pub fn inverse_real(
        &self,
        mut coefficients: Vec<Complex64>,
        precision: Precision,
    ) -> Result<Vec<f64>> {
        if coefficients.len() != element_count(&self.dims) {
            return Err(Error::validation(format!(
                "expected {} coefficients, got {}",
                element_count(&self.dims),
                coefficients.len()
            )));
        }
        transform_axes(&mut coefficients, &self.dims, &self.inverse);
        let scale = 1.0 / coefficients.len().max(1) as f64;
        let (max_mag, residue) = coefficients
            .iter()
            .fold((0.0f64, 0.0f64), |(mag, res), c| {
                (mag.max(c.norm()), res.max(c.im.abs()))
            });
        let tolerance = precision.residue_tolerance() * max_mag;
        if residue > tolerance {
            return Err(Error::Symmetry {
                residue: residue * scale,
                tolerance: tolerance * scale,
            });
        }
        Ok(coefficients.into_iter().map(|c| c.re * scale).collect())
    }
}

/// Apply the per-axis plans in place. Axes of length 1 are skipped.
fn transform_axes(buf: &mut [Complex64], dims: &[usize], plans: &[Arc<dyn Fft<f64>>]) {
    if buf.is_empty() {
        return;
    }
    let st = strides(dims);
    for (axis, plan) in plans.iter().enumerate() {
        let len = dims[axis];
        if len <= 1 {
            continue;
        }
        let stride = st[axis];
        if stride == 1 {
            run_lines(buf, len, plan);
            continue;
        }
        // Gather the strided lines into contiguous rows, transform, scatter.
        let block = len * stride;
        let mut lines = vec![Complex64::new(0.0, 0.0); buf.len()];
        lines
            .par_chunks_mut(block)
            .zip(buf.par_chunks(block))
            .for_each(|(dst, src)| {
                for inner in 0..stride {
                    let row = &mut dst[inner * len..(inner + 1) * len];
                    for (j, slot) in row.iter_mut().enumerate() {
                        *slot = src[j * stride + inner];
                    }
                }
            });
        run_lines(&mut lines, len, plan);
        buf.par_chunks_mut(block)
            .zip(lines.par_chunks(block))
            .for_each(|(dst, src)| {
                for inner in 0..stride {
                    let row = &src[inner * len..(inner + 1) * len];
                    for (j, &value) in row.iter().enumerate() {
                        dst[j * stride + inner] = value;
                    }
                }
            });
    }
}

fn run_lines(buf: &mut [Complex64], len: usize, plan: &Arc<dyn Fft<f64>>) {
    let lines = buf.len() / len;
    let per_task = (4096 / len).clamp(1, lines.max(1));
    buf.par_chunks_mut(per_task * len).for_each_init(
        || vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()],
        |scratch, chunk| plan.process_with_scratch(chunk, scratch),
    );
}

/// Unscaled forward DFT of a real field.
pub fn forward_dft(field: &ScalarField) -> Result<ComplexSpectrum> {
    Transformer::new(field.dims())?.forward(field)
}

/// Inverse DFT with the `1 / prod(dims)` factor. Fails if the result is not
/// real to within the precision's residue tolerance.
pub fn inverse_dft(spectrum: &ComplexSpectrum) -> Result<ScalarField> {
    Transformer::new(spectrum.dims())?.inverse(spectrum)
}

/// Direct `O(N^2)` evaluation of the DFT sum, for use as a test oracle.
///
/// Shares no code with the FFT path: every coefficient is summed explicitly
/// with twiddles computed from the exact integer phase `k*n mod N`.
pub fn brute_force_dft(field: &ScalarField) -> Result<ComplexSpectrum> {
    let n = field.len();
    if n > ORACLE_CAP {
        return Err(Error::OracleCap {
            len: n,
            cap: ORACLE_CAP,
        });
    }
    let dims = field.dims();
    let coords = |mut idx: usize| -> Vec<usize> {
        let mut c = vec![0; dims.len()];
        for axis in (0..dims.len()).rev() {
            c[axis] = idx % dims[axis];
            idx /= dims[axis];
        }
        c
    };
    let all: Vec<Vec<usize>> = (0..n).map(coords).collect();
    let values = all
        .iter()
        .map(|kc| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (nc, &x) in all.iter().zip(field.values()) {
                let turns: f64 = kc
                    .iter()
                    .zip(nc)
                    .zip(dims)
                    .map(|((&k, &m), &len)| ((k * m) % len) as f64 / len as f64)
                    .sum();
                let angle = -2.0 * PI * turns;
                acc += Complex64::new(x * angle.cos(), x * angle.sin());
            }
            acc
        })
        .collect();
    Ok(ComplexSpectrum::from_parts(
        dims.to_vec(),
        values,
        field.precision(),
    ))
}

/// True iff `max_k |X_k - conj(X_{-k})| <= tol`.
pub fn check_hermitian(spectrum: &ComplexSpectrum, tol: f64) -> bool {
    hermitian_defect(spectrum) <= tol
}

/// `max_k |X_k - conj(X_{-k})|`.
pub fn hermitian_defect(spectrum: &ComplexSpectrum) -> f64 {
    let mirror = mirror_table(spectrum.dims());
    spectrum
        .values()
        .iter()
        .zip(&mirror)
        .map(|(v, &m)| (v - spectrum.values()[m].conj()).norm())
        .fold(0.0, f64::max)
}
