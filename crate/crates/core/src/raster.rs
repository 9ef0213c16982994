//! Multi-band raster and mask i/o plus radiometric normalization.
//!
//! Two storage formats are accepted:
//! - 8-bit binary PGM (P5) / PPM (P6), for convenience;
//! - flat binary little-endian `f32`, band-sequential (band 0 plane, then
//!   band 1, ...), row-major within a band, with a JSON sidecar
//!   `<name>.json` of the form
//!   `{"width": W, "height": H, "bands": B, "dtype": "f32"}`.
//!
//! In memory the pixel data is row-major and band-interleaved:
//! `data[(row * width + col) * bands + band]`.

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values of a SAR raster never drop below this after [`normalize`], so the
/// speckle distance (which takes logs and square roots) stays finite.
pub const SAR_FLOOR: f64 = 1e-6;

/// Sensor modality of a raster; selects the patch distance kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Optical,
    Sar,
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "optical" => Ok(Modality::Optical),
            "sar" => Ok(Modality::Sar),
            other => Err(Error::InvalidParams(format!(
                "unknown modality '{other}' (expected 'optical' or 'sar')"
            ))),
        }
    }
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Modality::Optical => write!(f, "optical"),
            Modality::Sar => write!(f, "sar"),
        }
    }
}

/// A multi-band image with real-valued samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub bands: usize,
    pub modality: Modality,
    /// Row-major, band-interleaved: `data[(row * width + col) * bands + band]`.
    pub data: Vec<f64>,
}

impl Raster {
    /// Build a raster, checking the dimension/data-length invariant.
    pub fn new(
        width: usize,
        height: usize,
        bands: usize,
        modality: Modality,
        data: Vec<f64>,
    ) -> Result<Self> {
        if width == 0 || height == 0 || bands == 0 {
            return Err(Error::InvalidParams(format!(
                "raster dimensions must be positive, got {width}x{height}x{bands}"
            )));
        }
        if data.len() != width * height * bands {
            return Err(Error::DimensionMismatch(format!(
                "raster {width}x{height}x{bands} needs {} values, got {}",
                width * height * bands,
                data.len()
            )));
        }
        Ok(Raster {
            width,
            height,
            bands,
            modality,
            data,
        })
    }

    /// All-zero raster of the given shape.
    pub fn zeros(width: usize, height: usize, bands: usize, modality: Modality) -> Self {
        Raster {
            width,
            height,
            bands,
            modality,
            data: vec![0.0; width * height * bands],
        }
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize, band: usize) -> f64 {
        self.data[(row * self.width + col) * self.bands + band]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, band: usize, v: f64) {
        self.data[(row * self.width + col) * self.bands + band] = v;
    }
}

/// A per-pixel boolean plane; `true` marks a changed pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "mask {width}x{height} needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Mask {
            width,
            height,
            data,
        })
    }

    pub fn changed_count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

/// Per-band affine min-max normalization.
///
/// Optical bands map onto `[0, 1]`; SAR bands map onto `[SAR_FLOOR, 1]` so
/// every sample stays strictly positive. A constant band maps to the lower
/// endpoint. The map is idempotent: renormalizing an already normalized
/// raster reproduces it up to rounding.
pub fn normalize(raster: &Raster) -> Raster {
    let (lo, hi) = match raster.modality {
        Modality::Optical => (0.0, 1.0),
        Modality::Sar => (SAR_FLOOR, 1.0),
    };
    let mut out = raster.clone();
    for band in 0..raster.bands {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for px in 0..raster.width * raster.height {
            let v = raster.data[px * raster.bands + band];
            min = min.min(v);
            max = max.max(v);
        }
        let range = max - min;
        for px in 0..raster.width * raster.height {
            let idx = px * raster.bands + band;
            let v = if range > 0.0 {
                let unit = (raster.data[idx] - min) / range;
                lo + (hi - lo) * unit
            } else {
                lo
            };
            out.data[idx] = v.clamp(lo, hi);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Netpbm (P5 / P6), 8-bit binary
// ---------------------------------------------------------------------------

/// Pull one ASCII integer token off a netpbm header, skipping whitespace and
/// `#` comments.
fn netpbm_token(bytes: &[u8], pos: &mut usize) -> Result<u32> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::MalformedHeader(
            "expected an ASCII integer in netpbm header".into(),
        ));
    }
    let text = std::str::from_utf8(&bytes[start..*pos])
        .map_err(|_| Error::MalformedHeader("non-utf8 netpbm header".into()))?;
    text.parse::<u32>()
        .map_err(|_| Error::MalformedHeader(format!("bad integer '{text}' in netpbm header")))
}

fn load_netpbm(bytes: &[u8], modality: Modality) -> Result<Raster> {
    if bytes.len() < 2 {
        return Err(Error::MalformedHeader("file too short for netpbm".into()));
    }
    let bands = match &bytes[..2] {
        b"P5" => 1,
        b"P6" => 3,
        other => {
            return Err(Error::MalformedHeader(format!(
                "unsupported netpbm magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let mut pos = 2;
    let width = netpbm_token(bytes, &mut pos)? as usize;
    let height = netpbm_token(bytes, &mut pos)? as usize;
    let maxval = netpbm_token(bytes, &mut pos)?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::UnsupportedBitDepth(maxval));
    }
    // Exactly one whitespace byte separates the header from the payload.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::MalformedHeader(
            "missing separator before netpbm payload".into(),
        ));
    }
    pos += 1;
    let expected = width * height * bands;
    let payload = &bytes[pos..];
    if payload.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "netpbm payload has {} bytes, header declares {expected}",
            payload.len()
        )));
    }
    let data = payload.iter().map(|&b| b as f64).collect();
    Raster::new(width, height, bands, modality, data)
}

fn write_netpbm(path: &Path, raster: &Raster) -> Result<()> {
    let magic = match raster.bands {
        1 => "P5",
        3 => "P6",
        n => {
            return Err(Error::InvalidParams(format!(
                "netpbm output supports 1 or 3 bands, raster has {n}"
            )))
        }
    };
    let mut bytes = format!("{magic}\n{} {}\n255\n", raster.width, raster.height).into_bytes();
    bytes.extend(
        raster
            .data
            .iter()
            .map(|&v| v.round().clamp(0.0, 255.0) as u8),
    );
    fs::write(path, bytes)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Flat binary f32 + JSON sidecar
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct FlatHeader {
    width: usize,
    height: usize,
    bands: usize,
    dtype: String,
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    path.with_extension("json")
}

fn load_flat(path: &Path, modality: Modality) -> Result<Raster> {
    let header_text = fs::read_to_string(sidecar_path(path))?;
    let header: FlatHeader = serde_json::from_str(&header_text)?;
    if header.dtype != "f32" {
        return Err(Error::MalformedHeader(format!(
            "unsupported dtype '{}' (only f32)",
            header.dtype
        )));
    }
    let bytes = fs::read(path)?;
    let expected = header.width * header.height * header.bands;
    if bytes.len() != expected * 4 {
        return Err(Error::DimensionMismatch(format!(
            "flat payload has {} bytes, header declares {} f32 values",
            bytes.len(),
            expected
        )));
    }
    // Band-sequential on disk, interleaved in memory.
    let mut data = vec![0.0f64; expected];
    let plane = header.width * header.height;
    for (i, chunk) in bytes.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]) as f64;
        let band = i / plane;
        let px = i % plane;
        data[px * header.bands + band] = v;
    }
    Raster::new(header.width, header.height, header.bands, modality, data)
}

fn write_flat(path: &Path, raster: &Raster) -> Result<()> {
    let header = FlatHeader {
        width: raster.width,
        height: raster.height,
        bands: raster.bands,
        dtype: "f32".into(),
    };
    fs::write(
        sidecar_path(path),
        serde_json::to_string_pretty(&header)? + "\n",
    )?;
    let plane = raster.width * raster.height;
    let mut bytes = Vec::with_capacity(plane * raster.bands * 4);
    for band in 0..raster.bands {
        for px in 0..plane {
            let v = raster.data[px * raster.bands + band] as f32;
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Public entry points
// ---------------------------------------------------------------------------

fn is_netpbm_path(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some(e) if e.eq_ignore_ascii_case("pgm") || e.eq_ignore_ascii_case("ppm")
    )
}

/// Load a raster, dispatching on the file extension: `.pgm`/`.ppm` are
/// 8-bit netpbm, anything else is flat binary with a JSON sidecar.
pub fn load_raster(path: impl AsRef<Path>, modality: Modality) -> Result<Raster> {
    let path = path.as_ref();
    if is_netpbm_path(path) {
        load_netpbm(&fs::read(path)?, modality)
    } else {
        load_flat(path, modality)
    }
}

/// Write a raster in the format implied by the extension (see [`load_raster`]).
/// The flat binary route round-trips bit-exactly.
pub fn write_raster(path: impl AsRef<Path>, raster: &Raster) -> Result<()> {
    let path = path.as_ref();
    if is_netpbm_path(path) {
        write_netpbm(path, raster)
    } else {
        write_flat(path, raster)
    }
}

/// Load a ground-truth/change mask from a binary P5 PGM; values >= 128 are
/// treated as changed.
pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let raster = load_netpbm(&fs::read(path.as_ref())?, Modality::Optical)?;
    if raster.bands != 1 {
        return Err(Error::MalformedHeader(
            "mask files must be single-band PGM".into(),
        ));
    }
    let data = raster.data.iter().map(|&v| v >= 128.0).collect();
    Mask::new(raster.width, raster.height, data)
}

/// Write a mask as a binary P5 PGM with 0 = unchanged, 255 = changed.
pub fn write_mask(path: impl AsRef<Path>, mask: &Mask) -> Result<()> {
    let data = mask
        .data
        .iter()
        .map(|&b| if b { 255.0 } else { 0.0 })
        .collect();
    let raster = Raster::new(mask.width, mask.height, 1, Modality::Optical, data)?;
    write_netpbm(path.as_ref(), &raster)
}

/// Write a real-valued plane as a 16-bit P5 PGM after min-max scaling.
/// Intended for visualizing difference images; not loadable by [`load_raster`].
pub fn write_plane_pgm16(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    values: &[f64],
) -> Result<()> {
    if values.len() != width * height {
        return Err(Error::DimensionMismatch(format!(
            "plane {width}x{height} needs {} values, got {}",
            width * height,
            values.len()
        )));
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    let mut file = fs::File::create(path.as_ref())?;
    write!(file, "P5\n{width} {height}\n65535\n")?;
    let mut bytes = Vec::with_capacity(values.len() * 2);
    for &v in values {
        let unit = if range > 0.0 { (v - min) / range } else { 0.0 };
        let q = (unit * 65535.0).round().clamp(0.0, 65535.0) as u16;
        bytes.extend_from_slice(&q.to_be_bytes());
    }
    file.write_all(&bytes)?;
    Ok(())
}
