//! PGM (portable graymap) reading and writing.
//!
//! Both the binary `P5` and ASCII `P2` variants are read; only 8-bit depth
//! (`maxval ≤ 255`) is supported. Comments (`#` to end of line) may appear
//! anywhere in the header. Writing always emits a canonical `P5` with
//! `maxval = 255`, clamping and rounding intensities to `0..=255`.
//! Parse failures report the byte offset at which the input stopped making
//! sense.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Frame;

/// Streaming header tokenizer that tracks its byte offset for error
/// reporting.
struct Scanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Scanner { bytes, pos: 0 }
    }

    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    /// Next whitespace-delimited token and the offset it started at.
    fn token(&mut self) -> Result<(usize, &'a [u8])> {
        self.skip_whitespace_and_comments();
        if self.pos >= self.bytes.len() {
            return Err(Error::parse(self.bytes.len(), "unexpected end of file"));
        }
        let start = self.pos;
        while self.pos < self.bytes.len()
            && !self.bytes[self.pos].is_ascii_whitespace()
            && self.bytes[self.pos] != b'#'
        {
            self.pos += 1;
        }
        Ok((start, &self.bytes[start..self.pos]))
    }

    fn number(&mut self, what: &str) -> Result<(usize, u64)> {
        let (offset, token) = self.token()?;
        let text = std::str::from_utf8(token)
            .map_err(|_| Error::parse(offset, format!("{what} is not ASCII")))?;
        let value = text
            .parse::<u64>()
            .map_err(|_| Error::parse(offset, format!("{what} is not a number: {text:?}")))?;
        Ok((offset, value))
    }
}

/// Upper bound on `width × height` to reject absurd headers before
/// allocating.
const MAX_PIXELS: u64 = 1 << 26;

/// Decodes a PGM image from memory.
pub fn decode_pgm(bytes: &[u8]) -> Result<Frame> {
    let mut scanner = Scanner::new(bytes);
    let (magic_offset, magic) = scanner.token()?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        other => {
            return Err(Error::parse(
                magic_offset,
                format!(
                    "not a PGM file (magic {:?})",
                    String::from_utf8_lossy(other)
                ),
            ))
        }
    };
    let (w_off, width) = scanner.number("width")?;
    let (h_off, height) = scanner.number("height")?;
    if width == 0 {
        return Err(Error::parse(w_off, "width must be positive"));
    }
    if height == 0 {
        return Err(Error::parse(h_off, "height must be positive"));
    }
    if width * height > MAX_PIXELS {
        return Err(Error::parse(
            w_off,
            format!("{width}x{height} exceeds the supported image size"),
        ));
    }
    let (maxval_offset, maxval) = scanner.number("maxval")?;
    if maxval == 0 {
        return Err(Error::parse(maxval_offset, "maxval must be positive"));
    }
    if maxval > 255 {
        return Err(Error::UnsupportedDepth {
            maxval: maxval.min(u64::from(u32::MAX)) as u32,
        });
    }

    let pixel_count = (width * height) as usize;
    let mut data = Vec::with_capacity(pixel_count);
    if binary {
        // Exactly one whitespace byte separates the header from the raster.
        let sep = scanner.pos;
        if sep >= bytes.len() || !bytes[sep].is_ascii_whitespace() {
            return Err(Error::parse(sep, "expected whitespace before raster data"));
        }
        let raster = sep + 1;
        if bytes.len() < raster + pixel_count {
            return Err(Error::parse(
                bytes.len(),
                format!(
                    "raster truncated: need {pixel_count} bytes, found {}",
                    bytes.len().saturating_sub(raster)
                ),
            ));
        }
        for (i, &b) in bytes[raster..raster + pixel_count].iter().enumerate() {
            if u64::from(b) > maxval {
                return Err(Error::parse(
                    raster + i,
                    format!("sample {b} exceeds maxval {maxval}"),
                ));
            }
            data.push(f64::from(b));
        }
    } else {
        for _ in 0..pixel_count {
            let (offset, value) = scanner.number("sample")?;
            if value > maxval {
                return Err(Error::parse(
                    offset,
                    format!("sample {value} exceeds maxval {maxval}"),
                ));
            }
            data.push(value as f64);
        }
    }
    Frame::new(width as usize, height as usize, data)
}

/// Encodes a frame as a canonical binary `P5` PGM with `maxval = 255`.
/// Intensities are rounded to the nearest integer and clamped to
/// `0..=255`.
pub fn encode_pgm(frame: &Frame) -> Vec<u8> {
    let (width, height) = frame.dimensions();
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.reserve(width * height);
    for &v in frame.data() {
        out.push(v.round().clamp(0.0, 255.0) as u8);
    }
    out
}

/// Reads and decodes a PGM file.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<Frame> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

/// Encodes and atomically writes a frame as PGM.
pub fn write_pgm(path: impl AsRef<Path>, frame: &Frame) -> Result<()> {
    super::write_atomic(path.as_ref(), &encode_pgm(frame))
}
