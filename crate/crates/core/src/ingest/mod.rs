//! Getting fields in and out: raw files, base compressors, synthetic data
//! and the trial-and-error tuning baseline.

mod baseline;
mod raw;
mod synth;
mod tune;

pub use baseline::{
    file_pair_adapter, max_abs_error, uniform_quantize_compress, BaseCompressor, BaseOutput, UniformQuantizer,
};
pub use raw::{
    encode_raw, format_dims, load_raw, parse_dims, save_raw, save_raw_with, ByteOrder, DatasetDescriptor,
};
pub use synth::{synth_field, SynthKind};
pub use tune::{trial_and_error_tune, TuneOutcome, TuneStep, DEFAULT_SHRINK_FACTOR};
