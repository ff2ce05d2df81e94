//! Artifact writers. Nothing is written unless an output directory is set.

use std::fs;
use std::path::PathBuf;

use serde::Serialize;

use subsym_core::Result;

pub struct Artifacts {
    dir: Option<PathBuf>,
    pub written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: Option<PathBuf>) -> Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Ok(Self { dir, written: Vec::new() })
    }

    fn path(&mut self, name: &str) -> Option<PathBuf> {
        let p = self.dir.as_ref()?.join(name);
        self.written.push(p.clone());
        Some(p)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        if let Some(p) = self.path(name) {
            let mut s = serde_json::to_string_pretty(value)?;
            s.push('\n');
            fs::write(p, s)?;
        }
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        if let Some(p) = self.path(name) {
            let mut w = csv::Writer::from_path(&p).map_err(csv_err)?;
            w.write_record(header).map_err(csv_err)?;
            for r in rows {
                w.write_record(r).map_err(csv_err)?;
            }
            w.flush()?;
        }
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        if let Some(p) = self.path(name) {
            fs::write(p, body)?;
        }
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> subsym_core::Error {
    subsym_core::Error::Io(std::io::Error::other(e.to_string()))
}

/// Shortest round-trip formatting for CSV cells.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}
