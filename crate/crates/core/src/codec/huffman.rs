//! Blockwise canonical Huffman coding of signed quantization indices.
//!
//! Each index is split into a magnitude class (zero, or sign plus bit
//! length) and the raw bits below its leading one. Classes are Huffman
//! coded with a table built from the symbol counts of each block of
//! [`BLOCK_SIZE`] indices; the raw bits follow each code verbatim.
//!
//! Layout: `u64` index count, then per block a mode byte (`0` = one class
//! only, followed by that class; `1` = table, followed by [`CLASSES`] code
//! lengths), a `u32` payload length and the MSB-first bit payload.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Indices per Huffman table.
pub const BLOCK_SIZE: usize = 1 << 16;
/// Class alphabet: 0 for zero, `2 * bits + sign` for `bits` in 1..=32.
pub const CLASSES: usize = 66;
const MAX_CODE_LEN: u8 = 32;

#[inline]
fn classify(v: i32) -> (usize, u32, u32) {
    if v == 0 {
        return (0, 0, 0);
    }
    let mag = v.unsigned_abs();
    let bits = 32 - mag.leading_zeros();
    let class = (bits * 2 + u32::from(v < 0)) as usize;
    let extra_bits = bits - 1;
    let extra = if extra_bits == 0 { 0 } else { mag & ((1u32 << extra_bits) - 1) };
    (class, extra, extra_bits)
}

#[inline]
fn unclassify(class: usize, extra: u32) -> Result<i32> {
    if class == 0 {
        return Ok(0);
    }
    let bits = (class / 2) as u32;
    if !(1..=32).contains(&bits) {
        return Err(Error::format(format!("invalid magnitude class {class}")));
    }
    let mag = (1u64 << (bits - 1)) | u64::from(extra);
    let value = if class % 2 == 1 { -(mag as i64) } else { mag as i64 };
    i32::try_from(value).map_err(|_| Error::format("decoded index overflows 32 bits"))
}

/// Code lengths of an optimal prefix code for `counts` (0 for unused).
fn code_lengths(counts: &[u64; CLASSES]) -> [u8; CLASSES] {
    let mut lengths = [0u8; CLASSES];
    // node ids: leaves are class numbers, internal nodes follow
    let mut parent: Vec<usize> = vec![usize::MAX; CLASSES];
    let mut heap = BinaryHeap::new();
    for (class, &c) in counts.iter().enumerate() {
        if c > 0 {
            heap.push(Reverse((c, class)));
        }
    }
    if heap.len() < 2 {
        if let Some(Reverse((_, class))) = heap.pop() {
            lengths[class] = 1;
        }
        return lengths;
    }
    while heap.len() > 1 {
        let Reverse((wa, a)) = heap.pop().unwrap();
        let Reverse((wb, b)) = heap.pop().unwrap();
        let id = parent.len();
        parent.push(usize::MAX);
        parent[a] = id;
        parent[b] = id;
        heap.push(Reverse((wa + wb, id)));
    }
    for (class, &c) in counts.iter().enumerate() {
        if c > 0 {
            let mut depth = 0u8;
            let mut node = class;
            while parent[node] != usize::MAX {
                node = parent[node];
                depth += 1;
            }
            lengths[class] = depth;
        }
    }
    lengths
}

/// Canonical codes (value, length) for the given lengths.
fn canonical_codes(lengths: &[u8; CLASSES]) -> [(u32, u8); CLASSES] {
    let mut order: Vec<usize> = (0..CLASSES).filter(|&c| lengths[c] > 0).collect();
    order.sort_by_key(|&c| (lengths[c], c));
    let mut codes = [(0u32, 0u8); CLASSES];
    let mut code: u64 = 0;
    let mut prev_len = 0u8;
    for &c in &order {
        code <<= lengths[c] - prev_len;
        codes[c] = (code as u32, lengths[c]);
        code += 1;
        prev_len = lengths[c];
    }
    codes
}

struct BitWriter {
    bytes: Vec<u8>,
    acc: u64,
    nbits: u32,
}

impl BitWriter {
    fn new() -> Self {
        Self {
            bytes: Vec::new(),
            acc: 0,
            nbits: 0,
        }
    }

    #[inline]
    fn write(&mut self, value: u32, len: u32) {
        if len == 0 {
            return;
        }
        self.acc = (self.acc << len) | u64::from(value);
        self.nbits += len;
        while self.nbits >= 8 {
            self.nbits -= 8;
            self.bytes.push((self.acc >> self.nbits) as u8);
        }
        self.acc &= (1u64 << self.nbits) - 1;
    }

    fn finish(mut self) -> Vec<u8> {
        if self.nbits > 0 {
            self.bytes.push((self.acc << (8 - self.nbits)) as u8);
        }
        self.bytes
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    bit: u32,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0, bit: 0 }
    }

    #[inline]
    fn bit(&mut self) -> Result<u32> {
        let byte = *self
            .bytes
            .get(self.pos)
            .ok_or_else(|| Error::format("Huffman payload ends early"))?;
        let b = (byte >> (7 - self.bit)) & 1;
        self.bit += 1;
        if self.bit == 8 {
            self.bit = 0;
            self.pos += 1;
        }
        Ok(u32::from(b))
    }

    fn bits(&mut self, len: u32) -> Result<u32> {
        let mut v = 0u32;
        for _ in 0..len {
            v = (v << 1) | self.bit()?;
        }
        Ok(v)
    }
}

struct Decoder {
    counts: [u32; MAX_CODE_LEN as usize + 1],
    symbols: Vec<usize>,
}

impl Decoder {
    fn new(lengths: &[u8; CLASSES]) -> Result<Self> {
        let mut counts = [0u32; MAX_CODE_LEN as usize + 1];
        for &l in lengths {
            if l > MAX_CODE_LEN {
                return Err(Error::format(format!("code length {l} exceeds {MAX_CODE_LEN}")));
            }
            if l > 0 {
                counts[l as usize] += 1;
            }
        }
        let mut symbols: Vec<usize> = (0..CLASSES).filter(|&c| lengths[c] > 0).collect();
        symbols.sort_by_key(|&c| (lengths[c], c));
        if symbols.is_empty() {
            return Err(Error::format("Huffman table has no symbols"));
        }
        Ok(Self { counts, symbols })
    }

    fn decode(&self, reader: &mut BitReader<'_>) -> Result<usize> {
        let mut code: i64 = 0;
        let mut first: i64 = 0;
        let mut index: i64 = 0;
        for len in 1..=MAX_CODE_LEN as usize {
            code |= i64::from(reader.bit()?);
            let count = i64::from(self.counts[len]);
            if code - first < count {
                return Ok(self.symbols[(index + code - first) as usize]);
            }
            index += count;
            first = (first + count) << 1;
            code <<= 1;
        }
        Err(Error::format("invalid Huffman code"))
    }
}

/// Entropy-code `indices` (no outer compression).
pub fn encode(indices: &[i32]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&(indices.len() as u64).to_le_bytes());
    for block in indices.chunks(BLOCK_SIZE) {
        let mut counts = [0u64; CLASSES];
        for &v in block {
            counts[classify(v).0] += 1;
        }
        let used = counts.iter().filter(|&&c| c > 0).count();
        let mut writer = BitWriter::new();
        if used == 1 {
            let class = counts.iter().position(|&c| c > 0).unwrap();
            out.push(0);
            out.push(class as u8);
            for &v in block {
                let (_, extra, extra_bits) = classify(v);
                writer.write(extra, extra_bits);
            }
        } else {
            let lengths = code_lengths(&counts);
            let codes = canonical_codes(&lengths);
            out.push(1);
            out.extend_from_slice(&lengths);
            for &v in block {
                let (class, extra, extra_bits) = classify(v);
                let (code, len) = codes[class];
                writer.write(code, u32::from(len));
                writer.write(extra, extra_bits);
            }
        }
        let payload = writer.finish();
        out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&payload);
    }
    out
}

fn take<'a>(bytes: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::format("Huffman stream truncated"));
    }
    let (head, tail) = bytes.split_at(n);
    *bytes = tail;
    Ok(head)
}

/// Exact inverse of [`encode`].
pub fn decode(mut bytes: &[u8]) -> Result<Vec<i32>> {
    let total = u64::from_le_bytes(take(&mut bytes, 8)?.try_into().unwrap()) as usize;
    let mut out = Vec::with_capacity(total.min(1 << 26));
    while out.len() < total {
        let block_len = (total - out.len()).min(BLOCK_SIZE);
        let mode = take(&mut bytes, 1)?[0];
        let table = match mode {
            0 => {
                let class = take(&mut bytes, 1)?[0] as usize;
                if class >= CLASSES {
                    return Err(Error::format(format!("invalid magnitude class {class}")));
                }
                Err(class)
            }
            1 => {
                let lengths: [u8; CLASSES] = take(&mut bytes, CLASSES)?.try_into().unwrap();
                Ok(Decoder::new(&lengths)?)
            }
            other => return Err(Error::format(format!("unknown Huffman block mode {other}"))),
        };
        let payload_len = u32::from_le_bytes(take(&mut bytes, 4)?.try_into().unwrap()) as usize;
        let payload = take(&mut bytes, payload_len)?;
        let mut reader = BitReader::new(payload);
        for _ in 0..block_len {
            let class = match &table {
                Err(class) => *class,
                Ok(decoder) => decoder.decode(&mut reader)?,
            };
            let extra_bits = if class == 0 { 0 } else { (class / 2) as u32 - 1 };
            let extra = reader.bits(extra_bits)?;
            out.push(unclassify(class, extra)?);
        }
    }
    if !bytes.is_empty() {
        return Err(Error::format("trailing bytes after Huffman stream"));
    }
    Ok(out)
}
