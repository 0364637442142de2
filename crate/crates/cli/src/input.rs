use std::path::{Path, PathBuf};

use dualbound::ingest::{load_raw, parse_dims, DatasetDescriptor};
use dualbound::pipeline::{resolve_frequency, resolve_spatial, spectrum_bounds, BoundSpec};
use dualbound::{DualBounds, Error, Precision, Result, ScalarField};
use serde::Serialize;

use crate::{BoundArgs, Dtype, Layout};

pub(crate) fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".desc");
    PathBuf::from(s)
}

/// Descriptor from the layout flags, or from `PATH.desc` without `--dims`.
pub(crate) fn descriptor(path: &Path, layout: &Layout, dtype: Option<Dtype>) -> Result<DatasetDescriptor> {
    match &layout.dims {
        Some(dims) => {
            let precision = Precision::from(dtype.unwrap_or(layout.dtype));
            let mut d = DatasetDescriptor::new(path, parse_dims(dims)?, precision);
            d.byte_order = layout.byte_order.into();
            Ok(d)
        }
        None => {
            let sidecar = sidecar_path(path);
            if !sidecar.exists() {
                return Err(Error::Validation(format!(
                    "no --dims given and no sidecar at {}",
                    sidecar.display()
                )));
            }
            let mut d = DatasetDescriptor::read_sidecar(&sidecar)?;
            d.path = path.to_path_buf();
            if let Some(t) = dtype {
                d.precision = t.into();
            }
            Ok(d)
        }
    }
}

pub(crate) fn load(path: &Path, layout: &Layout, dtype: Option<Dtype>) -> Result<ScalarField> {
    load_raw(&descriptor(path, layout, dtype)?)
}

/// Loads a field paired with `reference`; without `--dims` or a sidecar it
/// inherits the reference's layout.
pub(crate) fn load_paired(
    path: &Path,
    reference: &Path,
    layout: &Layout,
    dtype: Option<Dtype>,
) -> Result<ScalarField> {
    if layout.dims.is_some() || sidecar_path(path).exists() {
        return load(path, layout, dtype);
    }
    let mut d = descriptor(reference, layout, dtype)?;
    d.path = path.to_path_buf();
    load_raw(&d)
}

/// Bounds as resolved to absolute values, for reports.
#[derive(Debug, Clone, Serialize)]
pub(crate) struct ResolvedBounds {
    pub spatial: f64,
    pub spatial_spec: String,
    /// Global frequency bound; absent in power-spectrum mode.
    pub frequency: Option<f64>,
    pub frequency_spec: String,
}

impl std::fmt::Display for ResolvedBounds {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "E = {:.6e} ({}), ", self.spatial, self.spatial_spec)?;
        match self.frequency {
            Some(d) => write!(f, "Delta = {:.6e} ({})", d, self.frequency_spec),
            None => write!(f, "Delta per coefficient ({})", self.frequency_spec),
        }
    }
}

pub(crate) fn spatial_spec(args: &BoundArgs) -> Result<BoundSpec> {
    match (args.eps, args.eps_rel) {
        (Some(e), None) => Ok(BoundSpec::Absolute(e)),
        (None, Some(p)) => Ok(BoundSpec::Relative(p)),
        _ => Err(Error::Validation("exactly one of --eps and --eps-rel is required".into())),
    }
}

pub(crate) fn resolve_bounds(args: &BoundArgs, original: &ScalarField) -> Result<(DualBounds, ResolvedBounds)> {
    let sspec = spatial_spec(args)?;
    let spatial = resolve_spatial(sspec, original)?;
    let spatial_spec = match sspec {
        BoundSpec::Absolute(_) => "absolute".to_string(),
        BoundSpec::Relative(p) => format!("{p}% of value range"),
    };
    let (bounds, frequency, frequency_spec) = match (args.delta, args.delta_rel, args.rho) {
        (Some(d), None, None) => {
            let d = resolve_frequency(BoundSpec::Absolute(d), original)?;
            (DualBounds::global(spatial, d)?, Some(d), "absolute".to_string())
        }
        (None, Some(p), None) => {
            let d = resolve_frequency(BoundSpec::Relative(p), original)?;
            (DualBounds::global(spatial, d)?, Some(d), format!("{p}% of max |X|"))
        }
        (None, None, Some(rho)) => (
            spectrum_bounds(original, spatial, rho)?,
            None,
            format!("power spectrum within rho = {rho}"),
        ),
        _ => {
            return Err(Error::Validation(
                "exactly one of --delta, --delta-rel and --rho is required".into(),
            ))
        }
    };
    Ok((
        bounds,
        ResolvedBounds {
            spatial,
            spatial_spec,
            frequency,
            frequency_spec,
        },
    ))
}
