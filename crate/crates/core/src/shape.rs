//! Row-major index arithmetic shared by the transform, projection and codec
//! layers. The last axis is the fastest-varying one.

/// Number of samples described by `dims`.
pub fn element_count(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// Row-major strides (in elements) for each axis.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; dims.len()];
    for axis in (0..dims.len().saturating_sub(1)).rev() {
        strides[axis] = strides[axis + 1] * dims[axis + 1];
    }
    strides
}

/// Flat index of the frequency `(dims - k) mod dims`, taken per axis.
pub fn mirror_index(dims: &[usize], index: usize) -> usize {
    let mut rest = index;
    let mut mirrored = 0;
    let mut scale = 1;
    for &extent in dims.iter().rev() {
        let coord = rest % extent;
        rest /= extent;
        let m = if coord == 0 { 0 } else { extent - coord };
        mirrored += m * scale;
        scale *= extent;
    }
    mirrored
}

/// `mirror_index` for every flat index, in order.
pub fn mirror_table(dims: &[usize]) -> Vec<usize> {
    let n = element_count(dims);
    if n == 0 {
        return Vec::new();
    }
    let mut table = Vec::with_capacity(n);
    let mut coords = vec![0usize; dims.len()];
    let st = strides(dims);
    for _ in 0..n {
        let mirrored = coords
            .iter()
            .zip(dims)
            .zip(&st)
            .map(|((&c, &extent), &s)| if c == 0 { 0 } else { (extent - c) * s })
            .sum();
        table.push(mirrored);
        for axis in (0..dims.len()).rev() {
            coords[axis] += 1;
            if coords[axis] < dims[axis] {
                break;
            }
            coords[axis] = 0;
        }
    }
    table
}

/// Signed frequency of DFT bin `coord` on an axis of length `extent`, i.e. its
/// offset from the center after a zero-frequency shift.
pub fn signed_frequency(coord: usize, extent: usize) -> i64 {
    if coord < extent.div_ceil(2) {
        coord as i64
    } else {
        coord as i64 - extent as i64
    }
}

/// The non-redundant half of a Hermitian spectrum: every axis kept in full
/// except the last, which keeps indices `0..=N/2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HalfSpectrum {
    dims: Vec<usize>,
    last: usize,
    last_half: usize,
}

impl HalfSpectrum {
    pub fn new(dims: &[usize]) -> Self {
        let last = dims.last().copied().unwrap_or(0);
        let last_half = if last == 0 { 0 } else { last / 2 + 1 };
        Self {
            dims: dims.to_vec(),
            last,
            last_half,
        }
    }

    pub fn len(&self) -> usize {
        if self.last == 0 {
            return 0;
        }
        element_count(&self.dims) / self.last * self.last_half
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Full-spectrum flat index of half-spectrum slot `half`.
    pub fn full_index(&self, half: usize) -> usize {
        let outer = half / self.last_half;
        let j = half % self.last_half;
        outer * self.last + j
    }

    /// Half-spectrum slot holding full index `full`, if it is stored directly.
    pub fn half_index(&self, full: usize) -> Option<usize> {
        let outer = full / self.last;
        let j = full % self.last;
        (j < self.last_half).then_some(outer * self.last_half + j)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }
}
