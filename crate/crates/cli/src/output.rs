//! Buffered outputs written all-or-nothing.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Stdout,
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct Artifact {
    pub target: Target,
    pub bytes: Vec<u8>,
}

impl Artifact {
    /// The main output goes to `path`, or stdout when there is none.
    pub fn main(path: Option<&Path>, bytes: Vec<u8>) -> Self {
        Self {
            target: path.map_or(Target::Stdout, |p| Target::File(p.to_path_buf())),
            bytes,
        }
    }

    pub fn file(path: &Path, bytes: Vec<u8>) -> Self {
        Self {
            target: Target::File(path.to_path_buf()),
            bytes,
        }
    }
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(roompass_core::Error::from)?;
    }
    w.into_inner().map_err(|e| std::io::Error::other(e.to_string()).into())
}

/// Writes every file through a temporary in the same directory, then
/// stdout. On the first failure all files already written are removed.
pub fn commit(artifacts: &[Artifact]) -> CliResult<()> {
    let mut written: Vec<PathBuf> = Vec::new();
    for a in artifacts {
        if let Target::File(p) = &a.target {
            if let Err(e) = write_file(p, &a.bytes) {
                for w in &written {
                    let _ = std::fs::remove_file(w);
                }
                return Err(e.into());
            }
            written.push(p.clone());
        }
    }
    let mut out = std::io::stdout().lock();
    for a in artifacts.iter().filter(|a| a.target == Target::Stdout) {
        out.write_all(&a.bytes)?;
    }
    out.flush()?;
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
