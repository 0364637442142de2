//! Post-hoc correction of lossy-compressed fields so that the reconstruction
//! error is bounded in both the spatial and the Fourier domain.
//!
//! Starting from the error of any pointwise error-bounded compressor, the
//! [`projection`] loop alternates between the spatial box `|eps_n| <= E` and
//! the frequency box `|Re delta_k|, |Im delta_k| <= Delta`. The displacements
//! are stored as sparse, quantized, entropy-coded edits ([`codec`]) that are
//! added back to the decompressed data at read time.

pub mod codec;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod pipeline;
pub mod projection;
pub mod shape;
pub mod transform;

pub use error::{Error, Result};
pub use projection::{DualBounds, FrequencyBound, ProjectionReport, SpatialBound};
pub use transform::{Complex64, ComplexSpectrum, Precision, ScalarField};
