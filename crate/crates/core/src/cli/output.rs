//! Artifact writers. Every file starts with the config hash and seed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::kernels::Kernel3;

/// 17 significant digits, `.` decimal separator.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    config_hash: String,
    seed: u64,
    written: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    config_hash: &'a str,
    seed: u64,
    report: &'a T,
}

impl ArtifactWriter {
    pub fn new(dir: &Path, config_hash: String, seed: u64) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), config_hash, seed, written: Vec::new() })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn header(&self) -> String {
        format!("# config_hash={}\n# seed={}\n", self.config_hash, self.seed)
    }

    fn put(&mut self, name: &str, body: &str) -> std::io::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body)?;
        self.written.push(path);
        Ok(())
    }

    /// Table with named columns, one row per record.
    pub fn csv_table(&mut self, name: &str, columns: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> std::io::Result<()> {
        let mut out = self.header();
        out.push_str(&columns.join(","));
        out.push('\n');
        for row in rows {
            let cells: Vec<String> = row.into_iter().map(format_number).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        self.put(name, &out)
    }

    /// Square matrix, one grid row per line.
    pub fn csv_matrix(&mut self, name: &str, m: &DMatrix<f64>) -> std::io::Result<()> {
        let columns: Vec<String> = (0..m.ncols()).map(|j| format!("j{j}")).collect();
        let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
        self.csv_table(name, &cols, (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()))
    }

    /// Three-index kernel in long form `i,j,k,value`.
    pub fn csv_kernel3(&mut self, name: &str, k: &Kernel3) -> std::io::Result<()> {
        let n = k.len();
        let mut out = self.header();
        out.push_str("i,j,k,value\n");
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let _ = writeln!(out, "{i},{j},{l},{}", format_number(k.get(i, j, l)));
                }
            }
        }
        self.put(name, &out)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, report: &T) -> std::io::Result<()> {
        let envelope = Envelope { config_hash: &self.config_hash, seed: self.seed, report };
        let mut text = serde_json::to_string_pretty(&envelope).map_err(std::io::Error::other)?;
        text.push('\n');
        self.put(name, &text)
    }
}
