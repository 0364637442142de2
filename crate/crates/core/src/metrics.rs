//! Power spectrum and the evaluation metrics.

use std::fmt;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::projection::FrequencyBound;
use crate::shape::{signed_frequency, strides};
use crate::transform::{ComplexSpectrum, ScalarField, Transformer};

/// `|mean| <= MEAN_GUARD * max|x|` selects [`MeanNormalization::Centered`].
pub const MEAN_GUARD: f64 = 1e-12;
/// Smallest per-component frequency bound, relative to `max|X|`.
pub const BOUND_FLOOR: f64 = 1e-9;
/// Shells holding at most this fraction of the total power carry only
/// round-off and get no ratio.
pub const EMPTY_SHELL_RTOL: f64 = 1e-20;
const SHELL_CHUNK: usize = 1 << 14;

/// How fluctuations are formed before transforming.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanNormalization {
    /// `x' = (x - mean) / mean`
    Relative,
    /// `x' = x - mean`, used when the mean is numerically zero.
    Centered,
}

impl MeanNormalization {
    pub fn for_field(field: &ScalarField) -> Self {
        let max = field.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mean = mean(field.values());
        if mean.abs() > MEAN_GUARD * max {
            MeanNormalization::Relative
        } else {
            MeanNormalization::Centered
        }
    }
}

impl fmt::Display for MeanNormalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeanNormalization::Relative => "relative",
            MeanNormalization::Centered => "centered",
        })
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len().max(1) as f64
}

/// Shell-summed power `P(k)`. Only non-empty shells are listed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerSpectrum {
    pub k_bins: Vec<u64>,
    pub power: Vec<f64>,
    pub counts: Vec<u64>,
    pub normalization: MeanNormalization,
}

impl PowerSpectrum {
    pub fn len(&self) -> usize {
        self.k_bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_bins.is_empty()
    }

    /// Mean power per cell in each shell.
    pub fn shell_average(&self) -> Vec<f64> {
        self.power
            .iter()
            .zip(&self.counts)
            .map(|(p, &c)| p / c as f64)
            .collect()
    }
}

/// Shell index of every cell: `round(|k|)` over signed frequencies.
pub fn shell_indices(dims: &[usize]) -> Vec<u64> {
    let n: usize = dims.iter().product();
    let st = strides(dims);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let r2: f64 = dims
                .iter()
                .zip(&st)
                .map(|(&d, &s)| {
                    let f = signed_frequency((i / s) % d, d) as f64;
                    f * f
                })
                .sum();
            r2.sqrt().round() as u64
        })
        .collect()
}

/// Power spectrum with the normalization picked by the mean guard.
pub fn power_spectrum(field: &ScalarField) -> Result<PowerSpectrum> {
    power_spectrum_with(field, MeanNormalization::for_field(field))
}

/// Power spectrum with an explicit normalization, so that a reconstruction
/// can be analysed the same way as its original.
pub fn power_spectrum_with(field: &ScalarField, normalization: MeanNormalization) -> Result<PowerSpectrum> {
    if field.is_empty() {
        return Err(Error::validation("power spectrum of an empty field"));
    }
    let m = mean(field.values());
    let fluct: Vec<f64> = match normalization {
        MeanNormalization::Relative => field.values().iter().map(|x| (x - m) / m).collect(),
        MeanNormalization::Centered => field.values().iter().map(|x| x - m).collect(),
    };
    let spectrum = Transformer::new(field.dims())?.forward_real(&fluct);
    let shells = shell_indices(field.dims());
    let top = shells.iter().copied().max().unwrap_or(0) as usize;
    // Fixed chunks summed in order keep the result independent of scheduling.
    let partials: Vec<(Vec<f64>, Vec<u64>)> = spectrum
        .par_chunks(SHELL_CHUNK)
        .zip(shells.par_chunks(SHELL_CHUNK))
        .map(|(xs, ss)| {
            let mut p = vec![0.0f64; top + 1];
            let mut c = vec![0u64; top + 1];
            for (x, &s) in xs.iter().zip(ss) {
                p[s as usize] += x.norm_sqr();
                c[s as usize] += 1;
            }
            (p, c)
        })
        .collect();
    let mut power = vec![0.0f64; top + 1];
    let mut counts = vec![0u64; top + 1];
    for (p, c) in partials {
        power.iter_mut().zip(p).for_each(|(a, b)| *a += b);
        counts.iter_mut().zip(c).for_each(|(a, b)| *a += b);
    }
    let mut out = PowerSpectrum {
        k_bins: Vec::new(),
        power: Vec::new(),
        counts: Vec::new(),
        normalization,
    };
    for (k, (p, c)) in power.into_iter().zip(counts).enumerate() {
        if c > 0 {
            out.k_bins.push(k as u64);
            out.power.push(p);
            out.counts.push(c);
        }
    }
    Ok(out)
}

/// One row of a spectrum comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectrumRatio {
    pub k: u64,
    pub original: f64,
    pub reconstructed: f64,
    /// `reconstructed / original`, `None` for an empty original shell.
    /// The zero shell is empty by construction since fluctuations are
    /// mean-free.
    pub ratio: Option<f64>,
}

/// Compare two fields shell by shell, both normalized the way the original
/// requires.
pub fn compare_spectra(original: &ScalarField, reconstructed: &ScalarField) -> Result<Vec<SpectrumRatio>> {
    check_dims(original, reconstructed)?;
    let mode = MeanNormalization::for_field(original);
    let a = power_spectrum_with(original, mode)?;
    let b = power_spectrum_with(reconstructed, mode)?;
    let empty = EMPTY_SHELL_RTOL * a.power.iter().sum::<f64>();
    Ok(a.k_bins
        .iter()
        .zip(a.power.iter().zip(&b.power))
        .map(|(&k, (&p, &q))| SpectrumRatio {
            k,
            original: p,
            reconstructed: q,
            ratio: (p > empty).then(|| q / p),
        })
        .collect())
}

/// `max |P^(k) - P(k)| / P(k)` over non-empty shells.
pub fn max_power_relative_error(rows: &[SpectrumRatio]) -> f64 {
    rows.iter()
        .filter_map(|r| r.ratio)
        .map(|q| (q - 1.0).abs())
        .fold(0.0, f64::max)
}

/// A decibel value with an exact infinity for error-free reconstructions.
/// Serialized as a number, or as the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Decibels {
    Finite(f64),
    Infinite,
}

impl Decibels {
    pub fn value(self) -> f64 {
        match self {
            Decibels::Finite(v) => v,
            Decibels::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Decibels::Infinite)
    }
}

impl fmt::Display for Decibels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decibels::Finite(v) => write!(f, "{v:.4}"),
            Decibels::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Decibels {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Decibels::Finite(v) => s.serialize_f64(*v),
            Decibels::Infinite => s.serialize_str("inf"),
        }
    }
}

fn check_dims(a: &ScalarField, b: &ScalarField) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::validation(format!(
            "shape mismatch: {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    Ok(())
}

/// `20 log10(range / RMSE)`.
pub fn psnr(original: &ScalarField, reconstructed: &ScalarField) -> Result<Decibels> {
    check_dims(original, reconstructed)?;
    let Some((lo, hi)) = original.value_range() else {
        return Err(Error::Undefined("PSNR of an empty field"));
    };
    let sq: f64 = original
        .values()
        .iter()
        .zip(reconstructed.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if sq == 0.0 {
        return Ok(Decibels::Infinite);
    }
    let range = hi - lo;
    if range == 0.0 {
        return Err(Error::Undefined("PSNR of a constant original with nonzero error"));
    }
    let rmse = (sq / original.len() as f64).sqrt();
    Ok(Decibels::Finite(20.0 * (range / rmse).log10()))
}

/// `10 log10(sum |X|^2 / sum |X - X^|^2)`.
pub fn ssnr(original: &ComplexSpectrum, reconstructed: &ComplexSpectrum) -> Result<Decibels> {
    if original.dims() != reconstructed.dims() {
        return Err(Error::validation(format!(
            "shape mismatch: {:?} vs {:?}",
            original.dims(),
            reconstructed.dims()
        )));
    }
    let signal: f64 = original.values().iter().map(|x| x.norm_sqr()).sum();
    if signal == 0.0 {
        return Err(Error::Undefined("SSNR of a zero-energy original spectrum"));
    }
    let noise: f64 = original
        .values()
        .iter()
        .zip(reconstructed.values())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    if noise == 0.0 {
        return Ok(Decibels::Infinite);
    }
    Ok(Decibels::Finite(10.0 * (signal / noise).log10()))
}

/// `|delta_k| / max_j |X_j|` for every component.
pub fn rfe(delta: &ComplexSpectrum, original: &ComplexSpectrum) -> Result<Vec<f64>> {
    if delta.dims() != original.dims() {
        return Err(Error::validation(format!(
            "shape mismatch: {:?} vs {:?}",
            delta.dims(),
            original.dims()
        )));
    }
    let max = original.max_magnitude();
    if max == 0.0 {
        return Err(Error::Undefined("RFE against an all-zero spectrum"));
    }
    Ok(delta.values().iter().map(|d| d.norm() / max).collect())
}

/// Largest RFE, 0 for empty inputs.
pub fn max_rfe(delta: &ComplexSpectrum, original: &ComplexSpectrum) -> Result<f64> {
    Ok(rfe(delta, original)?.into_iter().fold(0.0, f64::max))
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::validation(format!("rho must be finite and >= 0, got {rho}")));
    }
    Ok(())
}

fn floor_for(spectrum: &ComplexSpectrum) -> f64 {
    (BOUND_FLOOR * spectrum.max_magnitude()).max(f64::MIN_POSITIVE)
}

/// Per-component bounds `|X_k| (sqrt(1 + rho) - 1) / sqrt(2)` on both parts,
/// never below the floor. Keeping `delta_k` inside them keeps `|X^_k|^2`
/// within relative `rho` of `|X_k|^2`.
pub fn spectrum_bound_to_freq_bounds(original: &ComplexSpectrum, rho: f64) -> Result<FrequencyBound> {
    check_rho(rho)?;
    let c = ((1.0 + rho).sqrt() - 1.0) / std::f64::consts::SQRT_2;
    let floor = floor_for(original);
    let re: Vec<f64> = original
        .values()
        .iter()
        .map(|x| (x.norm() * c).max(floor))
        .collect();
    Ok(FrequencyBound::PerComponent { im: re.clone(), re })
}

/// Bounds that keep every populated shell of the power spectrum within
/// relative `rho`, accounting for the normalization of `original`.
///
/// Under [`MeanNormalization::Relative`] the reconstruction is divided by its own
/// mean, so the DC error rescales every shell. Non-DC components then get
/// `rho / 2` and the DC coefficient gets an amplitude budget `a |X_0|` with
/// `(1 + rho/2)/(1 - a)^2 <= 1 + rho` and `(1 - rho/2)/(1 + a)^2 >= 1 - rho`.
pub fn spectrum_mode_bounds(
    original: &ScalarField,
    spectrum: &ComplexSpectrum,
    rho: f64,
) -> Result<FrequencyBound> {
    check_rho(rho)?;
    if MeanNormalization::for_field(original) == MeanNormalization::Centered {
        return spectrum_bound_to_freq_bounds(spectrum, rho);
    }
    let bounds = spectrum_bound_to_freq_bounds(spectrum, rho / 2.0)?;
    let FrequencyBound::PerComponent { mut re, mut im } = bounds else {
        unreachable!("per-component bounds requested");
    };
    let upper = 1.0 - ((1.0 + rho / 2.0) / (1.0 + rho)).sqrt();
    let a = if rho < 1.0 {
        upper.min(((1.0 - rho / 2.0) / (1.0 - rho)).sqrt() - 1.0)
    } else {
        upper
    };
    let floor = floor_for(spectrum);
    if let Some(dc) = spectrum.values().first() {
        re[0] = (a * dc.norm()).max(floor);
        im[0] = floor;
    }
    Ok(FrequencyBound::PerComponent { re, im })
}
