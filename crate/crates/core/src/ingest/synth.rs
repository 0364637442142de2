//! Seeded synthetic fields with known spectral shape.

use std::fmt;
use std::str::FromStr;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::shape::{element_count, mirror_table, signed_frequency, strides};
use crate::transform::{Complex64, Precision, ScalarField, Transformer};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SynthKind {
    /// Independent uniform samples in `[0, 1)`.
    WhiteNoise,
    /// `P(k) ∝ k^-alpha`.
    PowerLaw { alpha: f64 },
    /// `P(k) ∝ exp(-k / k0)`.
    Exponential { k0: f64 },
    /// 1 at the origin sample, 0 elsewhere.
    Impulse,
    /// Every sample 1.
    Constant,
}

impl SynthKind {
    fn validate(self) -> Result<Self> {
        let ok = match self {
            SynthKind::PowerLaw { alpha: p } | SynthKind::Exponential { k0: p } => p > 0.0 && p.is_finite(),
            _ => true,
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::validation(format!("spectral parameter of {self} must be positive")))
        }
    }
}

/// `white-noise`, `power-law:ALPHA`, `exponential:K0`, `impulse`, `constant`.
impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let param = |default: f64| -> Result<f64> {
            arg.map_or(Ok(default), |a| {
                a.trim()
                    .parse()
                    .map_err(|_| Error::validation(format!("invalid parameter `{a}` in `{s}`")))
            })
        };
        let kind = match name.trim().to_ascii_lowercase().as_str() {
            "white-noise" | "white" => SynthKind::WhiteNoise,
            "power-law" | "powerlaw" => SynthKind::PowerLaw { alpha: param(2.0)? },
            "exponential" | "exp" => SynthKind::Exponential { k0: param(4.0)? },
            "impulse" => SynthKind::Impulse,
            "constant" => SynthKind::Constant,
            other => return Err(Error::validation(format!("unknown field kind `{other}`"))),
        };
        kind.validate()
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthKind::WhiteNoise => f.write_str("white-noise"),
            SynthKind::PowerLaw { alpha } => write!(f, "power-law:{alpha}"),
            SynthKind::Exponential { k0 } => write!(f, "exponential:{k0}"),
            SynthKind::Impulse => f.write_str("impulse"),
            SynthKind::Constant => f.write_str("constant"),
        }
    }
}

/// Deterministic field of the given kind. Spectral kinds draw a unit-modulus
/// random phase per non-redundant coefficient, scale it by `sqrt(P(|k|))`,
/// mirror it to a Hermitian spectrum and return `1 + zeta / std(zeta)` for
/// the inverse transform `zeta`.
pub fn synth_field(kind: SynthKind, dims: &[usize], seed: u64) -> Result<ScalarField> {
    let kind = kind.validate()?;
    let n = element_count(dims);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = match kind {
        SynthKind::WhiteNoise => (0..n).map(|_| rng.random::<f64>()).collect(),
        SynthKind::Impulse => (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
        SynthKind::Constant => vec![1.0; n],
        SynthKind::PowerLaw { alpha } => spectral(dims, &mut rng, |r| r.powf(-alpha))?,
        SynthKind::Exponential { k0 } => spectral(dims, &mut rng, |r| (-r / k0).exp())?,
    };
    ScalarField::new(dims.to_vec(), values, Precision::F64)
}

fn spectral(dims: &[usize], rng: &mut ChaCha8Rng, power: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    let transformer = Transformer::new(dims)?;
    let n = element_count(dims);
    let mirror = mirror_table(dims);
    let st = strides(dims);
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let m = mirror[k];
        if m < k {
            continue;
        }
        let r = dims
            .iter()
            .zip(&st)
            .map(|(&d, &s)| (signed_frequency((k / s) % d, d) as f64).powi(2))
            .sum::<f64>()
            .sqrt();
        if r == 0.0 {
            continue;
        }
        let amp = power(r).sqrt();
        if m == k {
            spectrum[k] = Complex64::new(if rng.random::<bool>() { amp } else { -amp }, 0.0);
        } else {
            let phase = std::f64::consts::TAU * rng.random::<f64>();
            let c = Complex64::from_polar(amp, phase);
            spectrum[k] = c;
            spectrum[m] = c.conj();
        }
    }
    let zeta = transformer.inverse_real(spectrum, Precision::F64)?;
    let mean = zeta.iter().sum::<f64>() / n.max(1) as f64;
    let var = zeta.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / n.max(1) as f64;
    let scale = if var > 0.0 { 1.0 / var.sqrt() } else { 0.0 };
    Ok(zeta.into_iter().map(|z| 1.0 + (z - mean) * scale).collect())
}
