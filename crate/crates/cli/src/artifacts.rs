//! Output files, written only once a run has fully succeeded.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

#[derive(Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Serialize(e.to_string()))?;
        bytes.push(b'\n');
        self.files.push((name.to_owned(), bytes));
        Ok(())
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = T>) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in rows {
            w.serialize(row).map_err(|e| CliError::Serialize(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Serialize(e.to_string()))?;
        self.files.push((name.to_owned(), bytes));
        Ok(())
    }

    /// Writes every file through a temporary name and a rename, so a reader
    /// never sees a half-written artifact.
    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for (name, bytes) in &self.files {
            let tmp = dir.join(format!(".{name}.tmp"));
            let target = dir.join(name);
            fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
            fs::rename(&tmp, &target).map_err(|e| CliError::io(&target, e))?;
        }
        Ok(())
    }
}
