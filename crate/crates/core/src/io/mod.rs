//! File formats: binary little-endian PLY for point clouds, binary PGM/PPM
//! for depth, semantic and color images.
//!
//! Every writer goes through [`write_atomic`] (temp file + rename), so a
//! crashed run never leaves a half-written file behind.

use std::io::Write;
use std::path::Path;

pub mod ply;
pub mod pnm;

pub use ply::{decode_ply, encode_ply, read_ply, write_ply, PlyError};
pub use pnm::{
    read_pgm16, read_pgm8, read_ppm, write_pgm16, write_pgm8, write_ppm, PnmError,
};

/// Writes `bytes` to `path` atomically: the content lands in a temporary
/// file in the same directory and is renamed over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
