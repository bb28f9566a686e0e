use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use qcc_core::blindbox::GameConfig;
use serde::{Deserialize, Serialize};

use crate::ServiceError;

/// One accepted operation. Only requests that changed a session are
/// written, so replaying the file rebuilds every session exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Entry {
    Create { id: String, seed: u64, config: GameConfig },
    Play { id: String, intensity: f64 },
    Guess { id: String, missing: Vec<usize> },
}

/// Append-only JSON-lines journal.
#[derive(Debug)]
pub struct Journal {
    file: File,
}

impl Journal {
    /// Opens `path` for appending and returns the entries already in it.
    pub fn open(path: &Path) -> Result<(Self, Vec<Entry>), ServiceError> {
        let entries = if path.exists() { read_entries(path)? } else { Vec::new() };
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok((Self { file }, entries))
    }

    pub fn append(&mut self, entry: &Entry) -> Result<(), ServiceError> {
        let mut line = serde_json::to_string(entry).expect("entry serialises");
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        Ok(())
    }
}

pub fn read_entries(path: &Path) -> Result<Vec<Entry>, ServiceError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(&line)
            .map_err(|e| ServiceError::Journal(format!("line {}: {e}", i + 1)))?;
        out.push(entry);
    }
    Ok(out)
}
