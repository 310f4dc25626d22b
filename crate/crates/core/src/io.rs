//! On-disk stack format.
//!
//! Every array is stored as a pair of files sharing a stem: `<stem>.toml`
//! holds a human-readable header and `<stem>.bin` the raw payload. Payload
//! values are little-endian and laid out in the canonical column-major order
//! of [`ComplexTensor3`]; complex entries are interleaved `(re, im)` pairs of
//! `f64`, real grids are plain `f64`, masks are one byte per entry.
//!
//! All writes go through a temporary file in the target directory followed
//! by a rename, so readers never see a half-written file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RealGrid;
use crate::insar::StackMetadata;
use crate::tensor::{ComplexTensor3, Dims3};

pub const LAYOUT: &str = "column-major";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    /// Interleaved `(re, im)` `f64` pairs.
    Complex,
    Real,
    /// One byte per entry, 0 or 1.
    Mask,
}

impl ElementKind {
    pub fn bytes_per_entry(self) -> usize {
        match self {
            ElementKind::Complex => 16,
            ElementKind::Real => 8,
            ElementKind::Mask => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StackHeader {
    pub dims: Dims3,
    pub layout: String,
    pub kind: ElementKind,
    /// Payload file name, relative to the header.
    pub payload: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub provenance: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<StackMetadata>,
}

impl StackHeader {
    pub fn new(dims: Dims3, kind: ElementKind) -> Self {
        Self {
            dims,
            layout: LAYOUT.into(),
            kind,
            payload: String::new(),
            units: None,
            seed: None,
            provenance: String::new(),
            metadata: None,
        }
    }

    pub fn with_metadata(mut self, meta: &StackMetadata) -> Self {
        self.metadata = Some(meta.clone());
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_units(mut self, units: impl Into<String>) -> Self {
        self.units = Some(units.into());
        self
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    fn entries(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn payload_len(&self) -> usize {
        self.entries() * self.kind.bytes_per_entry()
    }
}

/// Header path for a stem (`foo` or `foo.toml` both give `foo.toml`).
pub fn header_path(stem: &Path) -> PathBuf {
    if stem.extension().is_some_and(|e| e == "toml") {
        stem.to_path_buf()
    } else {
        with_suffix(stem, ".toml")
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn payload_path(header: &Path) -> PathBuf {
    header.with_extension("bin")
}

/// Writes `bytes` to `path` via a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("no file name in {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = dir.join(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

fn write_pair(stem: &Path, mut header: StackHeader, payload: &[u8]) -> Result<PathBuf> {
    debug_assert_eq!(payload.len(), header.payload_len());
    let hpath = header_path(stem);
    let ppath = payload_path(&hpath);
    header.payload = ppath
        .file_name()
        .expect("payload has a file name")
        .to_string_lossy()
        .into_owned();
    let text = toml::to_string(&header)
        .map_err(|e| Error::format(&hpath, format!("cannot serialise header: {e}")))?;
    write_atomic(&ppath, payload)?;
    write_atomic(&hpath, text.as_bytes())?;
    Ok(hpath)
}

/// Reads and validates a header, returning it with the raw payload bytes.
fn read_pair(stem: &Path, expected: ElementKind) -> Result<(StackHeader, Vec<u8>)> {
    let header = read_header(stem)?;
    let hpath = header_path(stem);
    if header.kind != expected {
        return Err(Error::format(
            &hpath,
            format!(
                "expected {expected:?} payload, header says {:?}",
                header.kind
            ),
        ));
    }
    let dir = hpath.parent().unwrap_or(Path::new(""));
    let ppath = dir.join(&header.payload);
    let bytes = fs::read(&ppath).map_err(|e| Error::io(&ppath, e))?;
    if bytes.len() != header.payload_len() {
        return Err(Error::format(
            &ppath,
            format!(
                "payload is {} bytes, header dims {:?} need {}",
                bytes.len(),
                header.dims,
                header.payload_len()
            ),
        ));
    }
    Ok((header, bytes))
}

pub fn read_header(stem: &Path) -> Result<StackHeader> {
    let hpath = header_path(stem);
    let text = fs::read_to_string(&hpath).map_err(|e| Error::io(&hpath, e))?;
    let header: StackHeader =
        toml::from_str(&text).map_err(|e| Error::format(&hpath, e.to_string()))?;
    if header.layout != LAYOUT {
        return Err(Error::format(
            &hpath,
            format!("unknown layout {:?}", header.layout),
        ));
    }
    if header.dims.contains(&0) {
        return Err(Error::format(
            &hpath,
            format!("empty dims {:?}", header.dims),
        ));
    }
    if let Some(meta) = &header.metadata {
        meta.validate()
            .map_err(|e| Error::format(&hpath, format!("bad metadata: {e}")))?;
    }
    Ok(header)
}

fn f64_chunks(bytes: &[u8]) -> impl Iterator<Item = f64> + '_ {
    bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
}

/// Writes a complex tensor; `header.dims` and `header.kind` are overwritten.
pub fn write_complex(stem: &Path, x: &ComplexTensor3, mut header: StackHeader) -> Result<PathBuf> {
    header.dims = x.dims();
    header.kind = ElementKind::Complex;
    let mut bytes = Vec::with_capacity(x.len() * 16);
    for z in x.as_slice() {
        bytes.extend_from_slice(&z.re.to_le_bytes());
        bytes.extend_from_slice(&z.im.to_le_bytes());
    }
    write_pair(stem, header, &bytes)
}

pub fn read_complex(stem: &Path) -> Result<(ComplexTensor3, StackHeader)> {
    let (header, bytes) = read_pair(stem, ElementKind::Complex)?;
    let vals: Vec<f64> = f64_chunks(&bytes).collect();
    let data = vals
        .chunks_exact(2)
        .map(|p| Complex64::new(p[0], p[1]))
        .collect();
    let x = ComplexTensor3::from_vec(header.dims, data)
        .map_err(|e| Error::format(header_path(stem), e.to_string()))?;
    if let Some(meta) = &header.metadata {
        if meta.n_images() != header.dims[2] {
            return Err(Error::format(
                header_path(stem),
                format!(
                    "{} baselines for {} images",
                    meta.n_images(),
                    header.dims[2]
                ),
            ));
        }
    }
    Ok((x, header))
}

/// Writes a 2-D real grid as a `rows × cols × 1` array.
pub fn write_grid(stem: &Path, g: &RealGrid, mut header: StackHeader) -> Result<PathBuf> {
    header.dims = [g.rows(), g.cols(), 1];
    header.kind = ElementKind::Real;
    let bytes: Vec<u8> = g.as_slice().iter().flat_map(|v| v.to_le_bytes()).collect();
    write_pair(stem, header, &bytes)
}

pub fn read_grid(stem: &Path) -> Result<(RealGrid, StackHeader)> {
    let (header, bytes) = read_pair(stem, ElementKind::Real)?;
    if header.dims[2] != 1 {
        return Err(Error::format(
            header_path(stem),
            format!("grid must have a unit third dim, got {:?}", header.dims),
        ));
    }
    let g = RealGrid::from_vec(header.dims[0], header.dims[1], f64_chunks(&bytes).collect())
        .map_err(|e| Error::format(header_path(stem), e.to_string()))?;
    Ok((g, header))
}

pub fn write_mask(
    stem: &Path,
    dims: Dims3,
    mask: &[bool],
    mut header: StackHeader,
) -> Result<PathBuf> {
    if mask.len() != dims.iter().product::<usize>() {
        return Err(Error::ShapeMismatch(format!(
            "{} mask entries for dims {dims:?}",
            mask.len()
        )));
    }
    header.dims = dims;
    header.kind = ElementKind::Mask;
    let bytes: Vec<u8> = mask.iter().map(|&b| b as u8).collect();
    write_pair(stem, header, &bytes)
}

pub fn read_mask(stem: &Path) -> Result<(Vec<bool>, StackHeader)> {
    let (header, bytes) = read_pair(stem, ElementKind::Mask)?;
    let mut mask = Vec::with_capacity(bytes.len());
    for b in bytes {
        match b {
            0 => mask.push(false),
            1 => mask.push(true),
            other => {
                return Err(Error::format(
                    header_path(stem),
                    format!("mask byte {other} is neither 0 nor 1"),
                ))
            }
        }
    }
    Ok((mask, header))
}

/// Serialises `value` as TOML and writes it atomically.
pub fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = toml::to_string(value)
        .map_err(|e| Error::format(path, format!("cannot serialise: {e}")))?;
    write_atomic(path, text.as_bytes())
}

pub fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}
