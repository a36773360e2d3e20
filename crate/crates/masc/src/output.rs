//! CSV tables and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::Result;

/// Fixed-width scientific rendering so repeated runs compare byte for byte.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)?;
        w.write_record(&self.headers)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub figure: String,
    pub seed: u64,
    pub config_sha256: String,
    pub files: Vec<PathBuf>,
    pub flagged_rows: usize,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let files: Vec<String> = self
            .files
            .iter()
            .map(|p| p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned()))
            .collect();
        let doc = json!({
            "figure": self.figure,
            "seed": self.seed,
            "config_sha256": self.config_sha256,
            "files": files,
            "flagged_rows": self.flagged_rows,
            "version": env!("CARGO_PKG_VERSION"),
        });
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_and_hash() {
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
        assert_eq!(
            sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn csv_uses_lf() {
        let dir = std::env::temp_dir().join(format!("masc-out-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        let p = dir.join("t.csv");
        t.write(&p).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "a,b\n1,\"x,y\"\n");
        fs::remove_dir_all(&dir).unwrap();
    }
}
