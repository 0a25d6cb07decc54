//! File formats: 8-bit PGM images and raw little-endian flow fields.
//!
//! All writers go through a temp-file-plus-rename so a failed run never
//! leaves a truncated file behind, and both formats round-trip bit-exactly
//! through their encode/decode pairs.

pub mod flow;
pub mod pgm;

pub use flow::{decode_flow, encode_flow, read_flow, write_flow, FLOW_MAGIC, FLOW_UNKNOWN};
pub use pgm::{decode_pgm, encode_pgm, read_pgm, write_pgm};

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Writes `bytes` to `path` atomically: the data lands in a unique
/// temporary sibling first and is renamed into place only once fully
/// written.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidConfig(format!("{} has no file name", path.display())))?;
    let unique = TEMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    let tmp = dir.join(format!(
        ".{}.{}-{}.tmp",
        name.to_string_lossy(),
        std::process::id(),
        unique
    ));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    if let Err(e) = std::fs::rename(&tmp, path) {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}
