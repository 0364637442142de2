use std::collections::BTreeMap;

use super::{EditSet, FlagVec};
use crate::error::{Error, Result};
use crate::projection::DualBounds;
use crate::shape::HalfSpectrum;
use crate::transform::Complex64;

/// Quantization code length used unless configured otherwise.
pub const DEFAULT_CODE_LENGTH: u8 = 16;

/// Quantization grid: each axis of the s-cube/f-cube is cut into `2^m`
/// intervals, so the step for a bound `b` is `2 b / 2^m`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizationParams {
    pub m: u8,
    /// Original (not shrunken) bounds the steps are derived from.
    pub bounds: DualBounds,
    pub dims: Vec<usize>,
}

impl QuantizationParams {
    pub fn new(m: u8, bounds: DualBounds, dims: &[usize]) -> Result<Self> {
        if !(1..=24).contains(&m) {
            return Err(Error::validation(format!("code length m={m} outside 1..=24")));
        }
        bounds.check_len(dims.iter().product())?;
        Ok(Self {
            m,
            bounds,
            dims: dims.to_vec(),
        })
    }

    fn scale(&self) -> f64 {
        2.0 * (-(self.m as f64)).exp2()
    }

    pub fn step_spatial(&self, n: usize) -> f64 {
        self.bounds.spatial_at(n) * self.scale()
    }

    /// `(step_re, step_im)` for full-spectrum coefficient `k`.
    pub fn step_frequency(&self, k: usize) -> (f64, f64) {
        let (re, im) = self.bounds.frequency_at(k);
        (re * self.scale(), im * self.scale())
    }
}

/// `round_half_away_from_zero(value / step)`, or `None` if the index does not
/// fit in 32 bits.
pub fn quantize_lane(value: f64, step: f64) -> Result<Option<i32>> {
    if !value.is_finite() {
        return Err(Error::validation(format!("edit value {value} is not finite")));
    }
    let q = (value / step).round();
    Ok((q.abs() <= i32::MAX as f64).then_some(q as i32))
}

pub fn dequantize_lane(index: i32, step: f64) -> f64 {
    index as f64 * step
}

/// An edit kept at full precision instead of as a quantization index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Escape {
    /// `slot` is the flat sample index.
    Spatial { slot: usize, value: f64 },
    /// `slot` is the half-spectrum index.
    Frequency { slot: usize, value: Complex64 },
}

/// Quantized edits as stored in an archive. Escaped entries keep their flag
/// and a zero placeholder index.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizedEdits {
    pub dims: Vec<usize>,
    pub spatial_flags: FlagVec,
    pub spatial_indices: Vec<i32>,
    pub frequency_flags: FlagVec,
    /// Interleaved `[re, im]` lanes, two per flagged coefficient.
    pub frequency_indices: Vec<i32>,
    pub spatial_escapes: BTreeMap<usize, f64>,
    pub frequency_escapes: BTreeMap<usize, Complex64>,
}

impl QuantizedEdits {
    pub fn escape_count(&self) -> usize {
        self.spatial_escapes.len() + self.frequency_escapes.len()
    }

    pub fn escapes(&self) -> impl Iterator<Item = Escape> + '_ {
        self.spatial_escapes
            .iter()
            .map(|(&slot, &value)| Escape::Spatial { slot, value })
            .chain(
                self.frequency_escapes
                    .iter()
                    .map(|(&slot, &value)| Escape::Frequency { slot, value }),
            )
    }

    /// Store the spatial edit at flagged `slot` (compact rank `rank`) verbatim.
    pub fn escape_spatial(&mut self, rank: usize, slot: usize, value: f64) {
        self.spatial_indices[rank] = 0;
        self.spatial_escapes.insert(slot, value);
    }

    /// Store the frequency edit at flagged half-spectrum `slot` verbatim.
    pub fn escape_frequency(&mut self, rank: usize, slot: usize, value: Complex64) {
        self.frequency_indices[2 * rank] = 0;
        self.frequency_indices[2 * rank + 1] = 0;
        self.frequency_escapes.insert(slot, value);
    }

    pub fn is_spatial_escaped(&self, slot: usize) -> bool {
        self.spatial_escapes.contains_key(&slot)
    }

    pub fn is_frequency_escaped(&self, slot: usize) -> bool {
        self.frequency_escapes.contains_key(&slot)
    }
}

/// Quantize every stored lane. Values whose index would overflow 32 bits are
/// escaped.
pub fn quantize_edits(edits: &EditSet, params: &QuantizationParams) -> Result<QuantizedEdits> {
    if edits.dims != params.dims {
        return Err(Error::validation(format!(
            "edits are for {:?}, parameters for {:?}",
            edits.dims, params.dims
        )));
    }
    let half = HalfSpectrum::new(&edits.dims);
    let mut q = QuantizedEdits {
        dims: edits.dims.clone(),
        spatial_flags: edits.spatial_flags.clone(),
        spatial_indices: Vec::with_capacity(edits.spatial_values.len()),
        frequency_flags: edits.frequency_flags.clone(),
        frequency_indices: Vec::with_capacity(2 * edits.frequency_values.len()),
        spatial_escapes: BTreeMap::new(),
        frequency_escapes: BTreeMap::new(),
    };
    for (slot, &value) in edits.spatial_flags.iter_ones().zip(&edits.spatial_values) {
        match quantize_lane(value, params.step_spatial(slot))? {
            Some(idx) => q.spatial_indices.push(idx),
            None => {
                q.spatial_indices.push(0);
                q.spatial_escapes.insert(slot, value);
            }
        }
    }
    for (slot, &value) in edits.frequency_flags.iter_ones().zip(&edits.frequency_values) {
        let (step_re, step_im) = params.step_frequency(half.full_index(slot));
        match (quantize_lane(value.re, step_re)?, quantize_lane(value.im, step_im)?) {
            (Some(re), Some(im)) => q.frequency_indices.extend([re, im]),
            _ => {
                q.frequency_indices.extend([0, 0]);
                q.frequency_escapes.insert(slot, value);
            }
        }
    }
    Ok(q)
}

/// Reconstruct edit values from indices, with escaped entries restored
/// verbatim.
pub fn dequantize_edits(q: &QuantizedEdits, params: &QuantizationParams) -> EditSet {
    let half = HalfSpectrum::new(&q.dims);
    let spatial_values = q
        .spatial_flags
        .iter_ones()
        .zip(&q.spatial_indices)
        .map(|(slot, &idx)| match q.spatial_escapes.get(&slot) {
            Some(&v) => v,
            None => dequantize_lane(idx, params.step_spatial(slot)),
        })
        .collect();
    let frequency_values = q
        .frequency_flags
        .iter_ones()
        .zip(q.frequency_indices.chunks_exact(2))
        .map(|(slot, lanes)| match q.frequency_escapes.get(&slot) {
            Some(&v) => v,
            None => {
                let (step_re, step_im) = params.step_frequency(half.full_index(slot));
                Complex64::new(dequantize_lane(lanes[0], step_re), dequantize_lane(lanes[1], step_im))
            }
        })
        .collect();
    EditSet {
        dims: q.dims.clone(),
        spatial_flags: q.spatial_flags.clone(),
        spatial_values,
        frequency_flags: q.frequency_flags.clone(),
        frequency_values,
    }
}
