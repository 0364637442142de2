//! Random edit sets and archives for codec roundtrips.

use dualbound::codec::{quantize_edits, ArchiveStatus, EditSet, EditsArchive, FlagVec, QuantizationParams};
use dualbound::shape::{element_count, mirror_index, HalfSpectrum};
use dualbound::{Complex64, DualBounds, FrequencyBound, Precision, SpatialBound};
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

pub fn random_dims(r: &mut ChaCha8Rng) -> Vec<usize> {
    match r.random_range(0..3) {
        0 => vec![r.random_range(1..300)],
        1 => vec![r.random_range(1..24), r.random_range(1..24)],
        _ => vec![r.random_range(1..9), r.random_range(1..9), r.random_range(1..9)],
    }
}

fn nonzero(r: &mut ChaCha8Rng, scale: f64) -> f64 {
    let v = scale * (2.0 * r.random::<f64>() - 1.0);
    if v == 0.0 {
        scale
    } else {
        v
    }
}

/// Edits with the given flag density. The expanded spectrum is Hermitian:
/// self-conjugate coefficients are real and conjugate pairs that both lie in
/// the stored half carry conjugate values.
pub fn random_edits(r: &mut ChaCha8Rng, dims: &[usize], density: f64, scale: f64) -> EditSet {
    let n = element_count(dims);
    let half = HalfSpectrum::new(dims);
    let spatial_flags = FlagVec::from_fn(n, |_| r.random::<f64>() < density);
    let spatial_values = (0..spatial_flags.count_ones()).map(|_| nonzero(r, scale)).collect();
    let zero = Complex64::new(0.0, 0.0);
    let mut dense = vec![zero; half.len()];
    for h in 0..half.len() {
        let k = half.full_index(h);
        let m = mirror_index(dims, k);
        dense[h] = match half.half_index(m) {
            Some(hm) if hm < h => dense[hm].conj(),
            _ if r.random::<f64>() >= density => zero,
            _ if m == k => Complex64::new(nonzero(r, scale), 0.0),
            _ => Complex64::new(nonzero(r, scale), scale * (2.0 * r.random::<f64>() - 1.0)),
        };
    }
    let frequency_flags = FlagVec::from_fn(half.len(), |h| dense[h] != zero);
    let frequency_values = dense.into_iter().filter(|v| *v != zero).collect();
    EditSet {
        dims: dims.to_vec(),
        spatial_flags,
        spatial_values,
        frequency_flags,
        frequency_values,
    }
}

/// Global or per-entry bounds; per-component frequency bounds are
/// Hermitian-consistent.
pub fn random_bounds(r: &mut ChaCha8Rng, dims: &[usize]) -> DualBounds {
    let n = element_count(dims);
    let spatial = if r.random::<bool>() {
        SpatialBound::Global(0.01 + r.random::<f64>())
    } else {
        SpatialBound::PerPoint((0..n).map(|_| 0.01 + r.random::<f64>()).collect())
    };
    let frequency = if r.random::<bool>() {
        FrequencyBound::Global(0.01 + 10.0 * r.random::<f64>())
    } else {
        let raw_re: Vec<f64> = (0..n).map(|_| 0.01 + r.random::<f64>()).collect();
        let raw_im: Vec<f64> = (0..n).map(|_| 0.01 + r.random::<f64>()).collect();
        let sym = |raw: &[f64]| (0..n).map(|k| raw[k.min(mirror_index(dims, k))]).collect();
        FrequencyBound::PerComponent {
            re: sym(&raw_re),
            im: sym(&raw_im),
        }
    };
    DualBounds::new(spatial, frequency, dims).expect("generated bounds are valid")
}

/// A quantized archive with some entries escaped.
pub fn random_archive(r: &mut ChaCha8Rng) -> EditsArchive {
    let dims = random_dims(r);
    let bounds = random_bounds(r, &dims);
    let m = r.random_range(1..=24);
    let params = QuantizationParams::new(m, bounds, &dims).unwrap();
    let scale = 10f64.powi(r.random_range(-3..3));
    let density = r.random::<f64>();
    let edits = random_edits(r, &dims, density, scale);
    let mut q = quantize_edits(&edits, &params).unwrap();
    let spatial: Vec<usize> = q.spatial_flags.iter_ones().collect();
    for (rank, &slot) in spatial.iter().enumerate() {
        if r.random::<f64>() < 0.05 {
            q.escape_spatial(rank, slot, edits.spatial_values[rank]);
        }
    }
    let freq: Vec<usize> = q.frequency_flags.iter_ones().collect();
    for (rank, &slot) in freq.iter().enumerate() {
        if r.random::<f64>() < 0.05 {
            q.escape_frequency(rank, slot, edits.frequency_values[rank]);
        }
    }
    EditsArchive {
        precision: if r.random::<bool>() { Precision::F32 } else { Precision::F64 },
        params,
        status: ArchiveStatus {
            converged: r.random::<bool>(),
            verified: r.random::<bool>(),
        },
        edits: q,
    }
}
