use crate::error::{Error, Result};

/// Bit vector packed 8 flags per byte: flag `n` is bit `n % 8` of byte
/// `n / 8`, least significant bit first.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FlagVec {
    len: usize,
    bytes: Vec<u8>,
}

impl FlagVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            bytes: vec![0; len.div_ceil(8)],
        }
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut flags = Self::zeros(len);
        for i in 0..len {
            if f(i) {
                flags.set(i);
            }
        }
        flags
    }

    /// Rebuild from packed bytes. Padding bits past `len` must be clear.
    pub fn from_bytes(len: usize, bytes: Vec<u8>) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::format(format!(
                "flag stream holds {} bytes, {len} flags need {}",
                bytes.len(),
                len.div_ceil(8)
            )));
        }
        if !len.is_multiple_of(8) {
            let tail = bytes[bytes.len() - 1] >> (len % 8);
            if tail != 0 {
                return Err(Error::format("flag stream has bits set past its length"));
            }
        }
        Ok(Self { len, bytes })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.bytes[i / 8] >> (i % 8) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        self.bytes[i / 8] |= 1 << (i % 8);
    }

    pub fn count_ones(&self) -> usize {
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Indices of set flags, ascending.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bytes.iter().enumerate().flat_map(|(byte_idx, &byte)| {
            (0..8)
                .filter(move |bit| byte >> bit & 1 == 1)
                .map(move |bit| byte_idx * 8 + bit)
        })
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }
}
