//! Binary PGM (P5) and PPM (P6) with maxval 255.

use std::fs;
use std::path::Path;

use actrec_core::image::{ColorImage, GrayImage, Image, Rgb};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PnmError {
    #[error("invalid PNM header field `{field}`: {reason}")]
    Header { field: &'static str, reason: String },
    #[error("truncated pixel data: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("expected a {expected} image, found {found}")]
    WrongKind { expected: &'static str, found: &'static str },
}

/// A decoded PGM or PPM raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyImage {
    Gray(GrayImage),
    Color(ColorImage),
}

impl AnyImage {
    fn kind(&self) -> &'static str {
        match self {
            AnyImage::Gray(_) => "P5 grayscale",
            AnyImage::Color(_) => "P6 color",
        }
    }

    pub fn width(&self) -> usize {
        match self {
            AnyImage::Gray(i) => i.width(),
            AnyImage::Color(i) => i.width(),
        }
    }

    pub fn height(&self) -> usize {
        match self {
            AnyImage::Gray(i) => i.height(),
            AnyImage::Color(i) => i.height(),
        }
    }

    pub fn into_gray(self) -> Result<GrayImage, PnmError> {
        match self {
            AnyImage::Gray(i) => Ok(i),
            other => Err(PnmError::WrongKind { expected: "P5 grayscale", found: other.kind() }),
        }
    }

    pub fn into_color(self) -> Result<ColorImage, PnmError> {
        match self {
            AnyImage::Color(i) => Ok(i),
            other => Err(PnmError::WrongKind { expected: "P6 color", found: other.kind() }),
        }
    }

    /// Luma raster; color images go through the BT.601 conversion.
    pub fn to_gray(&self) -> GrayImage {
        match self {
            AnyImage::Gray(i) => i.clone(),
            AnyImage::Color(i) => actrec_core::image::to_grayscale(i),
        }
    }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, field: &'static str) -> Result<usize, PnmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        let digits = &self.bytes[start..self.pos];
        if digits.is_empty() {
            let reason = match self.bytes.get(self.pos) {
                Some(b) => format!("unexpected byte 0x{b:02x}"),
                None => "missing".to_string(),
            };
            return Err(PnmError::Header { field, reason });
        }
        std::str::from_utf8(digits)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PnmError::Header { field, reason: "number out of range".into() })
    }
}

pub fn decode(bytes: &[u8]) -> Result<AnyImage, PnmError> {
    let color = match bytes.get(..2) {
        Some(b"P5") => false,
        Some(b"P6") => true,
        _ => {
            let found = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
            return Err(PnmError::Header { field: "magic", reason: format!("expected P5 or P6, found {found:?}") });
        }
    };
    let mut h = Header { bytes, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        let field = if width == 0 { "width" } else { "height" };
        return Err(PnmError::Header { field, reason: "must be positive".into() });
    }
    if maxval != 255 {
        return Err(PnmError::Header { field: "maxval", reason: format!("only 255 is supported, found {maxval}") });
    }
    match bytes.get(h.pos) {
        Some(b) if b.is_ascii_whitespace() => h.pos += 1,
        _ => return Err(PnmError::Header { field: "maxval", reason: "must be followed by one whitespace byte".into() }),
    }
    let channels = if color { 3 } else { 1 };
    let expected = width
        .checked_mul(height)
        .and_then(|p| p.checked_mul(channels))
        .ok_or_else(|| PnmError::Header { field: "width", reason: "image too large".into() })?;
    let payload = &bytes[h.pos..];
    if payload.len() < expected {
        return Err(PnmError::Truncated { expected, found: payload.len() });
    }
    let payload = &payload[..expected];
    Ok(if color {
        let px = payload.chunks_exact(3).map(|c| Rgb([c[0], c[1], c[2]])).collect();
        AnyImage::Color(Image::from_pixels(width, height, px).expect("size checked"))
    } else {
        AnyImage::Gray(Image::from_pixels(width, height, payload.to_vec()).expect("size checked"))
    })
}

pub fn encode_gray(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

pub fn encode_color(img: &ColorImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.reserve(img.pixels().len() * 3);
    for p in img.pixels() {
        out.extend_from_slice(&p.0);
    }
    out
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Decode { path: String, source: PnmError },
}

pub fn read(path: &Path) -> Result<AnyImage, ReadError> {
    let bytes = fs::read(path).map_err(|source| ReadError::Io { path: path.display().to_string(), source })?;
    decode(&bytes).map_err(|source| ReadError::Decode { path: path.display().to_string(), source })
}
