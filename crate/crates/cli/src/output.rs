use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, Result};

/// Serialized writer for one output directory; files are written in the
/// order requested.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Writes `rows` under a header derived from the row type. Every float
    /// passed in `values` must be finite.
    pub fn csv<R: Serialize>(&mut self, name: &str, rows: &[R], values: impl IntoIterator<Item = f64>) -> Result<()> {
        if let Some(bad) = values.into_iter().find(|v| !v.is_finite()) {
            return Err(mdd_core::Error::Numerical(format!("non-finite value {bad} in {name}")).into());
        }
        let path = self.root.join(name);
        let mut writer = csv::Writer::from_path(&path)?;
        for row in rows {
            writer.serialize(row)?;
        }
        writer.flush().map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.root.join(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }
}
