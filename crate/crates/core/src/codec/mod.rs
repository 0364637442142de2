//! Sparse edit storage: flags + compact values, `m`-bit quantization,
//! entropy coding, the on-disk archive, and application of decoded edits.

mod apply;
mod archive;
mod flags;
pub mod huffman;
mod quantize;
mod streams;

pub use apply::{apply_edits, verify_bounds, BoundsCheck};
pub(crate) use apply::{apply_edits_with, verify_bounds_with};
pub use archive::{read_archive, write_archive, ArchiveStatus, EditsArchive, FORMAT_VERSION, MAGIC};
pub use flags::FlagVec;
pub use quantize::{
    dequantize_edits, dequantize_lane, quantize_edits, quantize_lane, Escape, QuantizationParams,
    QuantizedEdits, DEFAULT_CODE_LENGTH,
};
pub use streams::{decode_streams, encode_streams, EncodedStreams};
pub(crate) use streams::zstd_compress;

use crate::projection::DenseEdits;
use crate::shape::{element_count, mirror_index, HalfSpectrum};
use crate::transform::Complex64;

/// A value that can be stored as an edit.
pub trait EditValue: Copy {
    fn is_zero(&self) -> bool;
}

impl EditValue for f64 {
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}

impl EditValue for Complex64 {
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
}

/// Split a dense vector into presence flags and its nonzero entries in
/// ascending index order.
pub fn compact_edits<T: EditValue>(dense: &[T]) -> (FlagVec, Vec<T>) {
    let flags = FlagVec::from_fn(dense.len(), |i| !dense[i].is_zero());
    let values = dense.iter().copied().filter(|v| !v.is_zero()).collect();
    (flags, values)
}

/// Inverse of [`compact_edits`].
pub fn expand_edits<T: EditValue>(flags: &FlagVec, values: &[T], zero: T) -> Vec<T> {
    let mut dense = vec![zero; flags.len()];
    for (slot, &v) in flags.iter_ones().zip(values) {
        dense[slot] = v;
    }
    dense
}

/// Sparse edits. Frequency edits live on the half spectrum described by
/// [`HalfSpectrum`]; the mirrored half is implied by Hermitian symmetry.
#[derive(Clone, Debug, PartialEq)]
pub struct EditSet {
    pub dims: Vec<usize>,
    pub spatial_flags: FlagVec,
    pub spatial_values: Vec<f64>,
    pub frequency_flags: FlagVec,
    pub frequency_values: Vec<Complex64>,
}

impl EditSet {
    pub fn empty(dims: &[usize]) -> Self {
        let half = HalfSpectrum::new(dims);
        Self {
            dims: dims.to_vec(),
            spatial_flags: FlagVec::zeros(element_count(dims)),
            spatial_values: Vec::new(),
            frequency_flags: FlagVec::zeros(half.len()),
            frequency_values: Vec::new(),
        }
    }

    pub fn from_dense(dense: &DenseEdits) -> Self {
        let half = HalfSpectrum::new(&dense.dims);
        let half_values: Vec<Complex64> = (0..half.len())
            .map(|h| dense.frequency[half.full_index(h)])
            .collect();
        let (spatial_flags, spatial_values) = compact_edits(&dense.spatial);
        let (frequency_flags, frequency_values) = compact_edits(&half_values);
        Self {
            dims: dense.dims.clone(),
            spatial_flags,
            spatial_values,
            frequency_flags,
            frequency_values,
        }
    }

    pub fn active_spatial(&self) -> usize {
        self.spatial_values.len()
    }

    pub fn active_frequency(&self) -> usize {
        self.frequency_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spatial_values.is_empty() && self.frequency_values.is_empty()
    }

    /// Dense spatial edits and the full Hermitian frequency edits.
    pub fn to_dense(&self) -> DenseEdits {
        let zero = Complex64::new(0.0, 0.0);
        let half = HalfSpectrum::new(&self.dims);
        let half_dense = expand_edits(&self.frequency_flags, &self.frequency_values, zero);
        let n = element_count(&self.dims);
        let frequency = (0..n)
            .map(|k| match half.half_index(k) {
                Some(h) => half_dense[h],
                None => {
                    let m = mirror_index(&self.dims, k);
                    half_dense[half.half_index(m).expect("mirror lies in stored half")].conj()
                }
            })
            .collect();
        DenseEdits {
            dims: self.dims.clone(),
            spatial: expand_edits(&self.spatial_flags, &self.spatial_values, 0.0),
            frequency,
        }
    }
}
