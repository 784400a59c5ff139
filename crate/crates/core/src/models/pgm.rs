//! Netpbm graymap decoding (P2 ASCII and P5 binary, maxval up to 255).

use serde::{Deserialize, Serialize};

/// Row-major grayscale image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self, PgmError> {
        if width == 0 || height == 0 {
            return Err(PgmError::ZeroDimension);
        }
        if width.checked_mul(height) != Some(data.len()) {
            return Err(PgmError::DataLength {
                expected: width.saturating_mul(height),
                actual: data.len(),
            });
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(PgmError::Intensity(*v));
        }
        Ok(GrayImage {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// Encodes as binary P5 with maxval 255, rounding each intensity.
    pub fn to_p5(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.data.iter().map(|v| (v * 255.0).round() as u8));
        out
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PgmError {
    #[error("unsupported image format (magic {0:?}); expected P2 or P5 graymap")]
    UnsupportedMagic(String),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("maxval {0} is out of range 1..=255")]
    MaxVal(u32),
    #[error("image dimensions must be at least 1x1")]
    ZeroDimension,
    #[error("image is too large")]
    TooLarge,
    #[error("truncated pixel data: expected {expected} samples, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("sample {value} exceeds maxval {maxval}")]
    SampleRange { value: u32, maxval: u32 },
    #[error("invalid sample {0:?}")]
    Sample(String),
    #[error("pixel data has {actual} values, expected {expected}")]
    DataLength { expected: usize, actual: usize },
    #[error("intensity {0} is outside [0, 1]")]
    Intensity(f64),
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, PgmError> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        Some(m) => return Err(PgmError::UnsupportedMagic(String::from_utf8_lossy(m).into())),
        None => return Err(PgmError::UnsupportedMagic(String::from_utf8_lossy(bytes).into())),
    };
    let mut cur = Cursor { bytes, pos: 2 };
    if !cur.at_separator() {
        return Err(PgmError::Header("missing whitespace after magic number".into()));
    }
    let width = cur.header_number("width")? as usize;
    let height = cur.header_number("height")? as usize;
    let maxval = cur.header_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(PgmError::ZeroDimension);
    }
    if maxval == 0 || maxval > 255 {
        return Err(PgmError::MaxVal(maxval));
    }
    let expected = width.checked_mul(height).ok_or(PgmError::TooLarge)?;
    let scale = f64::from(maxval);

    let samples = if binary {
        // Exactly one whitespace byte separates maxval from the raster.
        match cur.bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => return Err(PgmError::Header("missing whitespace after maxval".into())),
        }
        let raster = &bytes[cur.pos..];
        if raster.len() < expected {
            return Err(PgmError::Truncated {
                expected,
                found: raster.len(),
            });
        }
        let mut data = Vec::with_capacity(expected);
        for &b in &raster[..expected] {
            if u32::from(b) > maxval {
                return Err(PgmError::SampleRange {
                    value: b.into(),
                    maxval,
                });
            }
            data.push(f64::from(b) / scale);
        }
        data
    } else {
        // Every sample needs at least two bytes except the last; reject
        // impossible sizes before allocating.
        if expected > bytes.len() - cur.pos {
            return Err(PgmError::Truncated {
                expected,
                found: cur.count_tokens(),
            });
        }
        let mut data = Vec::with_capacity(expected);
        for found in 0..expected {
            let value = match cur.token() {
                Some(tok) => parse_decimal(tok).ok_or_else(|| {
                    PgmError::Sample(String::from_utf8_lossy(tok).into_owned())
                })?,
                None => return Err(PgmError::Truncated { expected, found }),
            };
            if value > maxval {
                return Err(PgmError::SampleRange { value, maxval });
            }
            data.push(f64::from(value) / scale);
        }
        data
    };
    GrayImage::new(width, height, samples)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn at_separator(&self) -> bool {
        matches!(self.bytes.get(self.pos), Some(b) if b.is_ascii_whitespace() || *b == b'#')
    }

    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() || b == b'#' {
                break;
            }
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn header_number(&mut self, field: &str) -> Result<u32, PgmError> {
        let tok = self
            .token()
            .ok_or_else(|| PgmError::Header(format!("missing {field}")))?;
        let value = parse_decimal(tok).ok_or_else(|| {
            PgmError::Header(format!("{field} {:?} is not a number", String::from_utf8_lossy(tok)))
        })?;
        if self.pos < self.bytes.len() && !self.at_separator() {
            return Err(PgmError::Header(format!("{field} is not followed by whitespace")));
        }
        if self.pos >= self.bytes.len() {
            return Err(PgmError::Header(format!("header ends after {field}")));
        }
        Ok(value)
    }

    fn count_tokens(&mut self) -> usize {
        let mut n = 0;
        while self.token().is_some() {
            n += 1;
        }
        n
    }
}

fn parse_decimal(tok: &[u8]) -> Option<u32> {
    if tok.is_empty() || !tok.iter().all(u8::is_ascii_digit) {
        return None;
    }
    std::str::from_utf8(tok).ok()?.parse().ok()
}
