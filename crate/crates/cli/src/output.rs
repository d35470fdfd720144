//! Collected output files, written once at the end of a command.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    pub fn json<T: Serialize>(&mut self, name: impl Into<PathBuf>, value: &T) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("reports serialize");
        bytes.push(b'\n');
        self.files.push((name.into(), bytes));
    }

    pub fn raw(&mut self, name: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, bytes)?;
        }
        Ok(())
    }
}

/// One CSV line per sweep price.
#[derive(Debug, Clone, Serialize)]
pub struct CsvRow {
    pub price: f64,
    pub min_rev: Option<f64>,
    pub max_rev: Option<f64>,
    pub n_equilibria: usize,
    pub bound_36_flag: bool,
}

pub fn csv_bytes(rows: &[CsvRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows serialize");
    }
    w.into_inner().expect("in-memory writer")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_empty_cells_for_missing_revenue() {
        let rows = [
            CsvRow { price: 1.5, min_rev: Some(0.0), max_rev: Some(0.25), n_equilibria: 2, bound_36_flag: true },
            CsvRow { price: 3.0, min_rev: None, max_rev: None, n_equilibria: 0, bound_36_flag: true },
        ];
        let text = String::from_utf8(csv_bytes(&rows)).unwrap();
        assert_eq!(text, "price,min_rev,max_rev,n_equilibria,bound_36_flag\n1.5,0.0,0.25,2,true\n3.0,,,0,true\n");
    }
}
