use super::{huffman, FlagVec};
use crate::error::{Error, Result};

/// zstd level for every archive stream.
const ZSTD_LEVEL: i32 = 15;

/// One domain's flags and indices after lossless coding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedStreams {
    pub flags: Vec<u8>,
    pub indices: Vec<u8>,
}

pub(crate) fn zstd_compress(bytes: &[u8]) -> Result<Vec<u8>> {
    let init = |e: std::io::Error| Error::format(format!("zstd init: {e}"));
    let mut compressor = zstd::bulk::Compressor::new(ZSTD_LEVEL).map_err(init)?;
    compressor
        .set_parameter(zstd::zstd_safe::CParameter::ChecksumFlag(true))
        .map_err(init)?;
    compressor
        .compress(bytes)
        .map_err(|e| Error::format(format!("zstd: {e}")))
}

pub(crate) fn zstd_decompress(bytes: &[u8]) -> Result<Vec<u8>> {
    zstd::stream::decode_all(bytes).map_err(|e| Error::format(format!("corrupt zstd stream: {e}")))
}

/// Flags go through zstd as packed bytes; indices through canonical
/// Huffman and then zstd.
pub fn encode_streams(flags: &FlagVec, indices: &[i32]) -> Result<EncodedStreams> {
    Ok(EncodedStreams {
        flags: zstd_compress(flags.as_bytes())?,
        indices: zstd_compress(&huffman::encode(indices))?,
    })
}

/// Inverse of [`encode_streams`]; `flag_count` is the number of flags.
pub fn decode_streams(streams: &EncodedStreams, flag_count: usize) -> Result<(FlagVec, Vec<i32>)> {
    let flags = FlagVec::from_bytes(flag_count, zstd_decompress(&streams.flags)?)?;
    let indices = huffman::decode(&zstd_decompress(&streams.indices)?)?;
    Ok((flags, indices))
}
