//! Atomic file output and float formatting for reproducible CSVs.

use std::io::Write;
use std::path::Path;

/// 17 significant digits: round-trip exact for f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Write via a temp file in the target directory plus rename, so no partial
/// file survives an error path.
pub fn write_atomic(path: &Path, content: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(content.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
