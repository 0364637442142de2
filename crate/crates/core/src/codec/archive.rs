//! The edits archive container.
//!
//! All integers are little-endian. Header:
//!
//! ```text
//! "FFCZ"  u16 version  u8 ndim  u64 extent[ndim]  u8 precision
//! u8 spatial mode (0 global, 1 per-point)  u8 frequency mode (0 global, 1 per-component)
//! spatial bounds: f64 | f64[N]
//! frequency bounds: f64 | f64[H] re, f64[H] im   (H = half-spectrum size)
//! u8 m  u8 status (bit 0 converged, bit 1 verified)
//! u64 active spatial  u64 active frequency
//! u64 length of: spatial flags, frequency flags, spatial indices, frequency indices
//! u64 escape count  u32 CRC32C of every preceding header byte
//! ```
//!
//! followed by the four streams in header order and the escape entries
//! (`u64` slot with bit 63 set for the frequency domain, then one `f64` lane
//! for spatial or two for frequency entries).

use std::collections::BTreeMap;

use super::{decode_streams, encode_streams, EditSet, EncodedStreams, QuantizationParams, QuantizedEdits};
use crate::error::{Error, Result};
use crate::projection::{DualBounds, FrequencyBound, SpatialBound};
use crate::shape::{element_count, mirror_index, HalfSpectrum};
use crate::transform::{Complex64, Precision};

pub const MAGIC: [u8; 4] = *b"FFCZ";
pub const FORMAT_VERSION: u16 = 1;
const FREQUENCY_ESCAPE_BIT: u64 = 1 << 63;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ArchiveStatus {
    /// The projection loop reached the intersection of both cubes.
    pub converged: bool,
    /// The dequantized edits passed the final bound check.
    pub verified: bool,
}

impl ArchiveStatus {
    fn to_byte(self) -> u8 {
        u8::from(self.converged) | u8::from(self.verified) << 1
    }

    fn from_byte(b: u8) -> Result<Self> {
        if b & !0b11 != 0 {
            return Err(Error::format(format!("unknown status bits {b:#04x}")));
        }
        Ok(Self {
            converged: b & 1 == 1,
            verified: b & 2 == 2,
        })
    }

    /// Whether the archive guarantees both bounds.
    pub fn feasible(self) -> bool {
        self.converged && self.verified
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EditsArchive {
    pub precision: Precision,
    pub params: QuantizationParams,
    pub status: ArchiveStatus,
    pub edits: QuantizedEdits,
}

impl EditsArchive {
    pub fn dims(&self) -> &[usize] {
        &self.params.dims
    }

    pub fn bounds(&self) -> &DualBounds {
        &self.params.bounds
    }

    /// Dequantized edits, escapes restored.
    pub fn decode_edits(&self) -> EditSet {
        super::dequantize_edits(&self.edits, &self.params)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        write_archive(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        read_archive(bytes)
    }
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

/// Serialize an archive.
pub fn write_archive(archive: &EditsArchive) -> Result<Vec<u8>> {
    let dims = archive.dims();
    let q = &archive.edits;
    if q.dims != dims {
        return Err(Error::validation(format!(
            "edits are for {:?}, parameters for {:?}",
            q.dims, dims
        )));
    }
    let half = HalfSpectrum::new(dims);
    let spatial = encode_streams(&q.spatial_flags, &q.spatial_indices)?;
    let frequency = encode_streams(&q.frequency_flags, &q.frequency_indices)?;

    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(dims.len() as u8);
    for &d in dims {
        put_u64(&mut out, d as u64);
    }
    out.push(archive.precision.tag());
    let bounds = archive.bounds();
    out.push(match bounds.spatial() {
        SpatialBound::Global(_) => 0,
        SpatialBound::PerPoint(_) => 1,
    });
    out.push(match bounds.frequency() {
        FrequencyBound::Global(_) => 0,
        FrequencyBound::PerComponent { .. } => 1,
    });
    match bounds.spatial() {
        SpatialBound::Global(e) => put_f64(&mut out, *e),
        SpatialBound::PerPoint(v) => v.iter().for_each(|&e| put_f64(&mut out, e)),
    }
    match bounds.frequency() {
        FrequencyBound::Global(d) => put_f64(&mut out, *d),
        FrequencyBound::PerComponent { re, im } => {
            for h in 0..half.len() {
                put_f64(&mut out, re[half.full_index(h)]);
            }
            for h in 0..half.len() {
                put_f64(&mut out, im[half.full_index(h)]);
            }
        }
    }
    out.push(archive.params.m);
    out.push(archive.status.to_byte());
    put_u64(&mut out, q.spatial_flags.count_ones() as u64);
    put_u64(&mut out, q.frequency_flags.count_ones() as u64);
    for len in [
        spatial.flags.len(),
        frequency.flags.len(),
        spatial.indices.len(),
        frequency.indices.len(),
    ] {
        put_u64(&mut out, len as u64);
    }
    put_u64(&mut out, q.escape_count() as u64);
    let crc = crc32c::crc32c(&out);
    out.extend_from_slice(&crc.to_le_bytes());

    out.extend_from_slice(&spatial.flags);
    out.extend_from_slice(&frequency.flags);
    out.extend_from_slice(&spatial.indices);
    out.extend_from_slice(&frequency.indices);
    for (&slot, &value) in &q.spatial_escapes {
        put_u64(&mut out, slot as u64);
        put_f64(&mut out, value);
    }
    for (&slot, &value) in &q.frequency_escapes {
        put_u64(&mut out, slot as u64 | FREQUENCY_ESCAPE_BIT);
        put_f64(&mut out, value.re);
        put_f64(&mut out, value.im);
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format(format!("archive truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::format("length does not fit in memory"))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::format("bound count overflows"))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// Parse and validate an archive. Any inconsistency is a format error.
pub fn read_archive(bytes: &[u8]) -> Result<EditsArchive> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::format("bad magic, not an edits archive"));
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(Error::format(format!("unsupported archive version {version}")));
    }
    let ndim = r.u8()? as usize;
    if !(1..=3).contains(&ndim) {
        return Err(Error::format(format!("invalid axis count {ndim}")));
    }
    let dims = (0..ndim).map(|_| r.usize()).collect::<Result<Vec<_>>>()?;
    let n = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::format("extents overflow"))?;
    let precision = Precision::from_tag(r.u8()?).ok_or_else(|| Error::format("unknown precision tag"))?;
    let spatial_mode = r.u8()?;
    let frequency_mode = r.u8()?;
    let half = HalfSpectrum::new(&dims);
    let spatial = match spatial_mode {
        0 => SpatialBound::Global(r.f64()?),
        1 => SpatialBound::PerPoint(r.f64s(n)?),
        other => return Err(Error::format(format!("unknown spatial bound mode {other}"))),
    };
    let frequency = match frequency_mode {
        0 => FrequencyBound::Global(r.f64()?),
        1 => {
            let re_half = r.f64s(half.len())?;
            let im_half = r.f64s(half.len())?;
            let expand = |stored: &[f64]| -> Vec<f64> {
                (0..n)
                    .map(|k| {
                        let h = half
                            .half_index(k)
                            .or_else(|| half.half_index(mirror_index(&dims, k)))
                            .expect("every coefficient or its mirror is stored");
                        stored[h]
                    })
                    .collect()
            };
            FrequencyBound::PerComponent {
                re: expand(&re_half),
                im: expand(&im_half),
            }
        }
        other => return Err(Error::format(format!("unknown frequency bound mode {other}"))),
    };
    let m = r.u8()?;
    let status = ArchiveStatus::from_byte(r.u8()?)?;
    let active_spatial = r.usize()?;
    let active_frequency = r.usize()?;
    let lens = [r.usize()?, r.usize()?, r.usize()?, r.usize()?];
    let escape_count = r.usize()?;
    let header_end = r.pos;
    let crc = r.u32()?;
    if crc != crc32c::crc32c(&bytes[..header_end]) {
        return Err(Error::format("header checksum mismatch"));
    }

    let bounds = DualBounds::new(spatial, frequency, &dims)
        .map_err(|e| Error::format(format!("invalid bounds in header: {e}")))?;
    let params = QuantizationParams::new(m, bounds, &dims)
        .map_err(|e| Error::format(format!("invalid quantization parameters: {e}")))?;

    let spatial_streams = EncodedStreams {
        flags: r.take(lens[0])?.to_vec(),
        indices: Vec::new(),
    };
    let frequency_flags_raw = r.take(lens[1])?.to_vec();
    let spatial_streams = EncodedStreams {
        indices: r.take(lens[2])?.to_vec(),
        ..spatial_streams
    };
    let frequency_streams = EncodedStreams {
        flags: frequency_flags_raw,
        indices: r.take(lens[3])?.to_vec(),
    };
    let (spatial_flags, spatial_indices) = decode_streams(&spatial_streams, element_count(&dims))?;
    let (frequency_flags, frequency_indices) = decode_streams(&frequency_streams, half.len())?;
    if spatial_flags.count_ones() != active_spatial || spatial_indices.len() != active_spatial {
        return Err(Error::format("spatial edit count does not match header"));
    }
    if frequency_flags.count_ones() != active_frequency || frequency_indices.len() != 2 * active_frequency {
        return Err(Error::format("frequency edit count does not match header"));
    }

    let mut spatial_escapes = BTreeMap::new();
    let mut frequency_escapes = BTreeMap::new();
    for _ in 0..escape_count {
        let key = r.u64()?;
        if key & FREQUENCY_ESCAPE_BIT != 0 {
            let slot = (key & !FREQUENCY_ESCAPE_BIT) as usize;
            if slot >= half.len() || !frequency_flags.get(slot) {
                return Err(Error::format(format!("escape for unflagged frequency slot {slot}")));
            }
            let value = Complex64::new(r.f64()?, r.f64()?);
            frequency_escapes.insert(slot, value);
        } else {
            let slot = key as usize;
            if slot >= n || !spatial_flags.get(slot) {
                return Err(Error::format(format!("escape for unflagged spatial slot {slot}")));
            }
            spatial_escapes.insert(slot, r.f64()?);
        }
    }
    if spatial_escapes.len() + frequency_escapes.len() != escape_count {
        return Err(Error::format("duplicate escape entries"));
    }
    if r.pos != bytes.len() {
        return Err(Error::format(format!(
            "{} trailing bytes after archive payload",
            bytes.len() - r.pos
        )));
    }

    Ok(EditsArchive {
        precision,
        params,
        status,
        edits: QuantizedEdits {
            dims,
            spatial_flags,
            spatial_indices,
            frequency_flags,
            frequency_indices,
            spatial_escapes,
            frequency_escapes,
        },
    })
}
