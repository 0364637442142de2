//! Headerless row-major sample files and their key=value sidecars.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::shape::element_count;
use crate::transform::{Precision, ScalarField};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ByteOrder {
    #[default]
    Little,
    Big,
}

impl FromStr for ByteOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "little" | "le" => Ok(ByteOrder::Little),
            "big" | "be" => Ok(ByteOrder::Big),
            other => Err(Error::validation(format!("unknown byte order `{other}`"))),
        }
    }
}

impl fmt::Display for ByteOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ByteOrder::Little => "little",
            ByteOrder::Big => "big",
        })
    }
}

/// Parse `64x64x64` or `64,64,64`.
pub fn parse_dims(s: &str) -> Result<Vec<usize>> {
    let dims = s
        .split(['x', 'X', ','])
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::validation(format!("invalid extent `{t}` in dims `{s}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    if dims.is_empty() || dims.len() > 3 {
        return Err(Error::validation(format!("dims `{s}` must have 1 to 3 axes")));
    }
    Ok(dims)
}

pub fn format_dims(dims: &[usize]) -> String {
    dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x")
}

/// Where a raw field lives and how to read it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetDescriptor {
    pub path: PathBuf,
    pub dims: Vec<usize>,
    pub precision: Precision,
    pub byte_order: ByteOrder,
    pub attribute: Option<String>,
}

impl DatasetDescriptor {
    pub fn new(path: impl Into<PathBuf>, dims: Vec<usize>, precision: Precision) -> Self {
        Self {
            path: path.into(),
            dims,
            precision,
            byte_order: ByteOrder::Little,
            attribute: None,
        }
    }

    pub fn expected_bytes(&self) -> u64 {
        (element_count(&self.dims) * self.precision.bytes_per_sample()) as u64
    }

    /// Parse a sidecar. Keys: `path`, `dims`, `dtype`, optional
    /// `byte_order` and `attribute`; `#` starts a comment. A relative `path`
    /// is taken relative to the sidecar's directory.
    pub fn parse_sidecar(text: &str, base: &Path) -> Result<Self> {
        let (mut path, mut dims, mut precision) = (None, None, None);
        let mut byte_order = ByteOrder::Little;
        let mut attribute = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::validation(format!("sidecar line {}: expected key=value", lineno + 1)))?;
            let value = value.trim();
            match key.trim() {
                "path" => path = Some(base.join(value)),
                "dims" => dims = Some(parse_dims(value)?),
                "dtype" => precision = Some(value.parse()?),
                "byte_order" => byte_order = value.parse()?,
                "attribute" => attribute = Some(value.to_string()),
                other => {
                    return Err(Error::validation(format!(
                        "sidecar line {}: unknown key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }
        let missing = |k: &str| Error::validation(format!("sidecar is missing `{k}`"));
        Ok(Self {
            path: path.ok_or_else(|| missing("path"))?,
            dims: dims.ok_or_else(|| missing("dims"))?,
            precision: precision.ok_or_else(|| missing("dtype"))?,
            byte_order,
            attribute,
        })
    }

    pub fn read_sidecar(sidecar: &Path) -> Result<Self> {
        let text = fs::read_to_string(sidecar).map_err(|e| Error::io(sidecar, e))?;
        let base = sidecar.parent().unwrap_or(Path::new(""));
        Self::parse_sidecar(&text, base)
    }

    pub fn to_sidecar(&self) -> String {
        let mut s = format!(
            "path={}\ndims={}\ndtype={}\nbyte_order={}\n",
            self.path.display(),
            format_dims(&self.dims),
            self.precision,
            self.byte_order
        );
        if let Some(a) = &self.attribute {
            s.push_str(&format!("attribute={a}\n"));
        }
        s
    }
}

/// Load a raw field; the file size must match the descriptor exactly.
pub fn load_raw(desc: &DatasetDescriptor) -> Result<ScalarField> {
    let bytes = fs::read(&desc.path).map_err(|e| Error::io(&desc.path, e))?;
    let expected = desc.expected_bytes();
    if bytes.len() as u64 != expected {
        return Err(Error::SizeMismatch {
            path: desc.path.clone(),
            expected,
            actual: bytes.len() as u64,
        });
    }
    let big = desc.byte_order == ByteOrder::Big;
    let values: Vec<f64> = match desc.precision {
        Precision::F32 => bytes
            .chunks_exact(4)
            .map(|c| {
                let b: [u8; 4] = c.try_into().unwrap();
                (if big { f32::from_be_bytes(b) } else { f32::from_le_bytes(b) }) as f64
            })
            .collect(),
        Precision::F64 => bytes
            .chunks_exact(8)
            .map(|c| {
                let b: [u8; 8] = c.try_into().unwrap();
                if big {
                    f64::from_be_bytes(b)
                } else {
                    f64::from_le_bytes(b)
                }
            })
            .collect(),
    };
    ScalarField::new(desc.dims.clone(), values, desc.precision)
}

/// Samples encoded at the field's precision. Fails if a sample overflows f32.
pub fn encode_raw(field: &ScalarField, order: ByteOrder) -> Result<Vec<u8>> {
    let big = order == ByteOrder::Big;
    let mut out = Vec::with_capacity(field.len() * field.precision().bytes_per_sample());
    for (i, &v) in field.values().iter().enumerate() {
        match field.precision() {
            Precision::F32 => {
                let x = v as f32;
                if !x.is_finite() {
                    return Err(Error::validation(format!("sample {i} ({v:e}) overflows f32")));
                }
                out.extend_from_slice(&if big { x.to_be_bytes() } else { x.to_le_bytes() });
            }
            Precision::F64 => out.extend_from_slice(&if big { v.to_be_bytes() } else { v.to_le_bytes() }),
        }
    }
    Ok(out)
}

/// Write a little-endian raw file.
pub fn save_raw(field: &ScalarField, path: &Path) -> Result<()> {
    save_raw_with(field, path, ByteOrder::Little)
}

pub fn save_raw_with(field: &ScalarField, path: &Path, order: ByteOrder) -> Result<()> {
    let bytes = encode_raw(field, order)?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}
