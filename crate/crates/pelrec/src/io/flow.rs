//! Raw flow-field files.
//!
//! Layout (all multi-byte values little-endian):
//!
//! ```text
//! bytes 0..4    magic "PIEH"
//! bytes 4..8    width  as i32
//! bytes 8..12   height as i32
//! then per pixel, in raster order: dx as f32, dy as f32
//! ```
//!
//! Skipped pixels are stored as the sentinel value [`FLOW_UNKNOWN`] in both
//! components and come back as skipped with a zero vector, so a
//! write/read/write cycle is bit-exact.

use std::path::Path;

use crate::engine::{DisplacementField, PixelStatus};
use crate::error::{Error, Result};
use crate::image::DisplacementVector;

/// File magic, spelling "PIEH".
pub const FLOW_MAGIC: [u8; 4] = *b"PIEH";

/// Sentinel component value marking an unknown / skipped pixel.
pub const FLOW_UNKNOWN: f32 = 1e9;

/// Components at or beyond this magnitude (or non-finite) are treated as
/// unknown when decoding.
const UNKNOWN_THRESHOLD: f32 = 1e8;

fn is_unknown(v: f32) -> bool {
    !v.is_finite() || v.abs() >= UNKNOWN_THRESHOLD
}

/// Encodes a displacement field. Vectors are narrowed to `f32`; pixels
/// whose status is [`PixelStatus::SkippedBoundary`] are written as
/// [`FLOW_UNKNOWN`] pairs.
pub fn encode_flow(field: &DisplacementField) -> Result<Vec<u8>> {
    let (width, height) = field.dimensions();
    if width > i32::MAX as usize || height > i32::MAX as usize {
        return Err(Error::InvalidConfig(format!(
            "field dimensions {width}x{height} exceed the format's i32 range"
        )));
    }
    let mut out = Vec::with_capacity(12 + width * height * 8);
    out.extend_from_slice(&FLOW_MAGIC);
    out.extend_from_slice(&(width as i32).to_le_bytes());
    out.extend_from_slice(&(height as i32).to_le_bytes());
    for (_, _, d, status) in field.pixels() {
        let (dx, dy) = if status == PixelStatus::SkippedBoundary {
            (FLOW_UNKNOWN, FLOW_UNKNOWN)
        } else {
            (d.dx as f32, d.dy as f32)
        };
        out.extend_from_slice(&dx.to_le_bytes());
        out.extend_from_slice(&dy.to_le_bytes());
    }
    Ok(out)
}

fn read_i32(bytes: &[u8], offset: usize) -> i32 {
    i32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("4 bytes"))
}

fn read_f32(bytes: &[u8], offset: usize) -> f32 {
    f32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("4 bytes"))
}

/// Decodes a flow file. Sentinel pixels come back as
/// [`PixelStatus::SkippedBoundary`] with a zero vector; everything else is
/// marked converged.
pub fn decode_flow(bytes: &[u8]) -> Result<DisplacementField> {
    if bytes.len() < 4 {
        return Err(Error::parse(bytes.len(), "file too short for the magic"));
    }
    if bytes[0..4] != FLOW_MAGIC {
        return Err(Error::parse(0, "bad magic, not a flow file"));
    }
    if bytes.len() < 12 {
        return Err(Error::parse(bytes.len(), "file too short for dimensions"));
    }
    let width = read_i32(bytes, 4);
    let height = read_i32(bytes, 8);
    if width <= 0 {
        return Err(Error::parse(4, format!("width must be positive, got {width}")));
    }
    if height <= 0 {
        return Err(Error::parse(8, format!("height must be positive, got {height}")));
    }
    let (width, height) = (width as usize, height as usize);
    let expected = 12 + width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::parse(4, "dimensions overflow"))?;
    if bytes.len() != expected {
        return Err(Error::parse(
            bytes.len().min(expected),
            format!("payload holds {} bytes, layout requires {expected}", bytes.len()),
        ));
    }
    let mut field = DisplacementField::zero(width, height);
    let mut offset = 12;
    for y in 0..height {
        for x in 0..width {
            let dx = read_f32(bytes, offset);
            let dy = read_f32(bytes, offset + 4);
            offset += 8;
            if is_unknown(dx) || is_unknown(dy) {
                field.set_entry(x, y, DisplacementVector::zero(), PixelStatus::SkippedBoundary);
            } else {
                field.set_entry(
                    x,
                    y,
                    DisplacementVector::new(f64::from(dx), f64::from(dy)),
                    PixelStatus::Converged,
                );
            }
        }
    }
    Ok(field)
}

/// Reads and decodes a flow file.
pub fn read_flow(path: impl AsRef<Path>) -> Result<DisplacementField> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_flow(&bytes)
}

/// Encodes and atomically writes a displacement field.
pub fn write_flow(path: impl AsRef<Path>, field: &DisplacementField) -> Result<()> {
    super::write_atomic(path.as_ref(), &encode_flow(field)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::PixelEstimate;

    #[test]
    fn single_pixel_layout() {
        let field = DisplacementField::uniform(1, 1, DisplacementVector::new(0.5, -0.25));
        let bytes = encode_flow(&field).unwrap();
        // 4 magic + 4 width + 4 height + 2 × 4 component bytes.
        assert_eq!(bytes.len(), 20);
        assert_eq!(&bytes[0..4], b"PIEH");
        assert_eq!(read_i32(&bytes, 4), 1);
        assert_eq!(read_i32(&bytes, 8), 1);
        assert_eq!(read_f32(&bytes, 12), 0.5);
        assert_eq!(read_f32(&bytes, 16), -0.25);
    }

    #[test]
    fn roundtrip_preserves_vectors_and_skips() {
        let mut field = DisplacementField::from_fn(4, 3, |x, y| {
            DisplacementVector::new(x as f64 * 0.5, y as f64 - 1.0)
        });
        field.set(
            2,
            1,
            PixelEstimate {
                displacement: DisplacementVector::new(9.0, 9.0),
                status: PixelStatus::SkippedBoundary,
                iterations: 0,
            },
        );
        let bytes = encode_flow(&field).unwrap();
        let back = decode_flow(&bytes).unwrap();
        assert_eq!(back.dimensions(), (4, 3));
        for y in 0..3 {
            for x in 0..4 {
                if (x, y) == (2, 1) {
                    assert_eq!(back.status(x, y), PixelStatus::SkippedBoundary);
                    assert_eq!(back.vector(x, y), DisplacementVector::zero());
                } else {
                    assert_eq!(back.vector(x, y), field.vector(x, y));
                    assert_eq!(back.status(x, y), PixelStatus::Converged);
                }
            }
        }
        // Re-encoding is bit-exact.
        assert_eq!(encode_flow(&back).unwrap(), bytes);
    }

    #[test]
    fn statuses_other_than_skipped_serialize_as_valid() {
        let mut field = DisplacementField::zero(2, 1);
        field.set(
            0,
            0,
            PixelEstimate {
                displacement: DisplacementVector::new(1.0, 2.0),
                status: PixelStatus::FallbackUsed,
                iterations: 3,
            },
        );
        field.set(
            1,
            0,
            PixelEstimate {
                displacement: DisplacementVector::new(-1.0, 0.5),
                status: PixelStatus::MaxIterations,
                iterations: 10,
            },
        );
        let back = decode_flow(&encode_flow(&field).unwrap()).unwrap();
        assert_eq!(back.vector(0, 0), DisplacementVector::new(1.0, 2.0));
        assert_eq!(back.vector(1, 0), DisplacementVector::new(-1.0, 0.5));
        assert_eq!(back.status(0, 0), PixelStatus::Converged);
    }

    #[test]
    fn rejects_bad_magic_dimensions_and_truncation() {
        assert!(matches!(
            decode_flow(b"011").unwrap_err(),
            Error::Parse { offset: 3, .. }
        ));
        assert!(matches!(
            decode_flow(b"FLOW\x01\0\0\0\x01\0\0\0\0\0\0\0\0\0\0\0").unwrap_err(),
            Error::Parse { offset: 0, .. }
        ));

        let field = DisplacementField::zero(2, 2);
        let mut bytes = encode_flow(&field).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(decode_flow(&bytes).unwrap_err(), Error::Parse { .. }));

        // Negative width.
        let mut bad = encode_flow(&DisplacementField::zero(1, 1)).unwrap();
        bad[4..8].copy_from_slice(&(-1i32).to_le_bytes());
        assert!(matches!(
            decode_flow(&bad).unwrap_err(),
            Error::Parse { offset: 4, .. }
        ));
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.flo");
        let field =
            DisplacementField::from_fn(5, 4, |x, y| DisplacementVector::new(x as f64, -(y as f64)));
        write_flow(&path, &field).unwrap();
        let back = read_flow(&path).unwrap();
        assert_eq!(back, field);
    }

    #[test]
    fn nan_components_become_skipped() {
        let field = DisplacementField::zero(1, 1);
        let mut bytes = encode_flow(&field).unwrap();
        bytes[12..16].copy_from_slice(&f32::NAN.to_le_bytes());
        let back = decode_flow(&bytes).unwrap();
        assert_eq!(back.status(0, 0), PixelStatus::SkippedBoundary);
        assert!(back.vector(0, 0).is_finite());
    }
}
