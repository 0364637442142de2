use serde::Serialize;

use super::EditSet;
use crate::error::{Error, Result};
use crate::projection::DualBounds;
use crate::transform::{Precision, ScalarField, Transformer};

/// Result of checking a corrected field against both bounds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsCheck {
    pub ok: bool,
    /// `max(|eps_n| - E_n)` clamped at 0.
    pub max_spatial_excess: f64,
    /// `max(|Re delta_k| - D_re(k), |Im delta_k| - D_im(k))` clamped at 0.
    pub max_freq_excess: f64,
    /// Row-major positions with `|eps_n| > E_n`.
    pub spatial_violations: Vec<usize>,
    /// Full-spectrum indices with either part out of bounds.
    pub frequency_violations: Vec<usize>,
}

fn check_shape(a: &[usize], b: &[usize]) -> Result<()> {
    if a != b {
        return Err(Error::validation(format!("shape mismatch: {a:?} vs {b:?}")));
    }
    Ok(())
}

/// `decompressed + spatial + inverse_dft(frequency)`. The sum is kept at
/// full f64 width; the precision tag of `decompressed` is carried over and
/// rounding happens only on save.
pub fn apply_edits(decompressed: &ScalarField, edits: &EditSet) -> Result<ScalarField> {
    let transformer = Transformer::new(decompressed.dims())?;
    apply_edits_with(&transformer, decompressed, edits)
}

pub(crate) fn apply_edits_with(
    transformer: &Transformer,
    decompressed: &ScalarField,
    edits: &EditSet,
) -> Result<ScalarField> {
    check_shape(decompressed.dims(), &edits.dims)?;
    let mut values = decompressed.values().to_vec();
    let dense = edits.to_dense();
    for (v, s) in values.iter_mut().zip(&dense.spatial) {
        *v += s;
    }
    if edits.active_frequency() > 0 {
        let spatial = transformer.inverse_real(dense.frequency, Precision::F64)?;
        for (v, s) in values.iter_mut().zip(spatial) {
            *v += s;
        }
    }
    Ok(ScalarField::from_parts(
        decompressed.dims().to_vec(),
        values,
        decompressed.precision(),
    ))
}

/// Recompute both errors from scratch and test them against `bounds`, which
/// should be the user's original (unshrunken) bounds.
pub fn verify_bounds(
    original: &ScalarField,
    corrected: &ScalarField,
    bounds: &DualBounds,
) -> Result<BoundsCheck> {
    let transformer = Transformer::new(original.dims())?;
    verify_bounds_with(&transformer, original, corrected, bounds)
}

pub(crate) fn verify_bounds_with(
    transformer: &Transformer,
    original: &ScalarField,
    corrected: &ScalarField,
    bounds: &DualBounds,
) -> Result<BoundsCheck> {
    check_shape(original.dims(), corrected.dims())?;
    bounds.check_len(original.len())?;
    let epsilon: Vec<f64> = corrected
        .values()
        .iter()
        .zip(original.values())
        .map(|(c, o)| c - o)
        .collect();
    let mut max_spatial_excess = 0.0f64;
    let mut spatial_violations = Vec::new();
    for (n, e) in epsilon.iter().enumerate() {
        let excess = e.abs() - bounds.spatial_at(n);
        if excess > 0.0 {
            spatial_violations.push(n);
            max_spatial_excess = max_spatial_excess.max(excess);
        }
    }
    let delta = transformer.forward_real(&epsilon);
    let mut max_freq_excess = 0.0f64;
    let mut frequency_violations = Vec::new();
    for (k, d) in delta.iter().enumerate() {
        let (br, bi) = bounds.frequency_at(k);
        let excess = (d.re.abs() - br).max(d.im.abs() - bi);
        if excess > 0.0 {
            frequency_violations.push(k);
            max_freq_excess = max_freq_excess.max(excess);
        }
    }
    Ok(BoundsCheck {
        ok: spatial_violations.is_empty() && frequency_violations.is_empty(),
        max_spatial_excess,
        max_freq_excess,
        spatial_violations,
        frequency_violations,
    })
}
