//! Base compressors whose output the correction stage edits.

use crate::codec::huffman;
use crate::codec::zstd_compress;
use crate::error::{Error, Result};
use crate::transform::ScalarField;

use super::raw::{load_raw, DatasetDescriptor};

/// Reconstruction produced by a base compressor for a declared bound.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseOutput {
    pub decompressed: ScalarField,
    /// Stored size of the compressed representation in bytes.
    pub payload_bytes: u64,
    /// The pointwise bound the output honours.
    pub error_bound: f64,
}

/// An error-bounded lossy compressor: `|x^_n - x_n| <= E` for every `n`.
pub trait BaseCompressor {
    fn name(&self) -> &str;
    fn compress(&self, field: &ScalarField, error_bound: f64) -> Result<BaseOutput>;

    /// Smallest bound at which the compressor is still lossy for `field`.
    fn min_error_bound(&self, field: &ScalarField) -> f64 {
        let scale = field.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (f64::EPSILON * scale).max(f64::MIN_POSITIVE)
    }
}

/// Mid-tread uniform quantizer with bin width `2E`.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformQuantizer;

impl BaseCompressor for UniformQuantizer {
    fn name(&self) -> &str {
        "quantizer"
    }

    fn compress(&self, field: &ScalarField, error_bound: f64) -> Result<BaseOutput> {
        let (decompressed, payload_bytes) = uniform_quantize_compress(field, error_bound)?;
        Ok(BaseOutput {
            decompressed,
            payload_bytes,
            error_bound,
        })
    }

    /// Below `max|x| / 2^32` codes leave the 32-bit range and samples are
    /// stored verbatim.
    fn min_error_bound(&self, field: &ScalarField) -> f64 {
        let scale = field.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (scale / (2.0 * i32::MAX as f64)).max(f64::MIN_POSITIVE)
    }
}

/// Fixed header of the quantizer stream: bound, sample count, outlier count.
const QUANTIZER_HEADER: u64 = 24;

/// `x^_n = round(x_n / 2E) * 2E`, returned with the entropy-coded size of
/// the integer codes.
///
/// When rounding to the field's precision would move `x^_n` more than `E`
/// from `x_n`, the neighbouring codes are tried; failing those, or when the
/// code does not fit in 32 bits, the sample is stored verbatim as an outlier.
pub fn uniform_quantize_compress(field: &ScalarField, error_bound: f64) -> Result<(ScalarField, u64)> {
    if !(error_bound > 0.0 && error_bound.is_finite()) {
        return Err(Error::validation(format!(
            "error bound must be positive and finite, got {error_bound}"
        )));
    }
    let precision = field.precision();
    let width = 2.0 * error_bound;
    let mut codes = Vec::with_capacity(field.len());
    let mut outliers = 0u64;
    let values: Vec<f64> = field
        .values()
        .iter()
        .map(|&x| {
            let q = (x / width).round();
            let pick = [q, q - 1.0, q + 1.0].into_iter().find_map(|c| {
                let y = precision.represent(c * width);
                ((y - x).abs() <= error_bound && c.abs() <= i32::MAX as f64).then_some((c, y))
            });
            match pick {
                Some((c, y)) => {
                    codes.push(c as i32);
                    y
                }
                None => {
                    codes.push(0);
                    outliers += 1;
                    x
                }
            }
        })
        .collect();
    let size = zstd_compress(&huffman::encode(&codes))?.len() as u64
        + QUANTIZER_HEADER
        + outliers * (8 + precision.bytes_per_sample() as u64);
    let decompressed = ScalarField::new(field.dims().to_vec(), values, precision)?;
    Ok((decompressed, size))
}

/// Load an original and the output of an external compressor.
pub fn file_pair_adapter(
    original: &DatasetDescriptor,
    decompressed: &DatasetDescriptor,
) -> Result<(ScalarField, ScalarField)> {
    if original.dims != decompressed.dims {
        return Err(Error::validation(format!(
            "original dims {:?} differ from decompressed dims {:?}",
            original.dims, decompressed.dims
        )));
    }
    if original.precision != decompressed.precision {
        return Err(Error::validation(format!(
            "original is {} but decompressed is {}",
            original.precision, decompressed.precision
        )));
    }
    Ok((load_raw(original)?, load_raw(decompressed)?))
}

/// Largest pointwise error of a reconstruction.
pub fn max_abs_error(original: &ScalarField, reconstructed: &ScalarField) -> f64 {
    original
        .values()
        .iter()
        .zip(reconstructed.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}
