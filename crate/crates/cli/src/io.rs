//! Input loading and atomic output writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use perfcausal::dataset::{Dataset, Metadata};
use perfcausal::graph::{from_text, MixedGraph};

use crate::error::CliError;

pub fn read(path: &Path) -> Result<String, CliError> {
    if !path.exists() {
        return Err(CliError::Usage(format!("input `{}` does not exist", path.display())));
    }
    std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("reading `{}`: {e}", path.display())))
}

pub fn graph(path: &Path) -> Result<MixedGraph, CliError> {
    from_text(&read(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn metadata(path: &Path) -> Result<Metadata, CliError> {
    Metadata::parse(&read(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn dataset(data: &Path, meta: &Path) -> Result<Dataset, CliError> {
    let meta = metadata(meta)?;
    let text = read(data)?;
    Dataset::from_csv(text.as_bytes(), &meta).map_err(|e| {
        let msg = format!("{}: {e}", data.display());
        match CliError::from(e) {
            CliError::Degenerate(_) => CliError::Degenerate(msg),
            _ => CliError::Data(msg),
        }
    })
}

/// Output paths of one run; refuses to overwrite any input.
pub struct Outputs {
    inputs: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(inputs: &[&Path]) -> Self {
        Outputs {
            inputs: inputs.iter().map(|p| canonical(p)).collect(),
        }
    }

    /// Writes via a temporary file in the target directory, then renames.
    pub fn write(&self, path: &Path, contents: &[u8]) -> Result<(), CliError> {
        if self.inputs.contains(&canonical(path)) {
            return Err(CliError::Usage(format!("output `{}` would overwrite an input", path.display())));
        }
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let fail = |e: std::io::Error| CliError::Data(format!("writing `{}`: {e}", path.display()));
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
        tmp.write_all(contents).map_err(fail)?;
        tmp.as_file().sync_all().map_err(fail)?;
        tmp.persist(path).map_err(|e| fail(e.error))?;
        Ok(())
    }
}

fn canonical(p: &Path) -> PathBuf {
    std::fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}
