//! Deterministic run artifacts: CSV tables, plot matrices, and the JSON
//! manifest with content checksums.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Fixed-width float formatting: 17 significant digits, enough to
/// round-trip any f64 bit pattern, so identical runs emit identical bytes.
pub fn fmt_f64(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        // Integers stay readable (and still exact).
        format!("{v}")
    } else {
        format!("{v:.16e}")
    }
}

/// A CSV table under construction: header plus formatted rows.
pub struct CsvTable {
    header: String,
    rows: Vec<String>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            header: columns.join(","),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, fields: Vec<String>) {
        self.rows.push(fields.join(","));
    }

    pub fn to_string(&self) -> String {
        let mut s = String::with_capacity(64 * (self.rows.len() + 1));
        s.push_str(&self.header);
        s.push('\n');
        for r in &self.rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }
}

/// Read a whitespace-separated dense matrix: one row per line, blank lines
/// and `#` comments ignored.
pub fn read_matrix(path: &Path) -> anyhow::Result<DMatrix<f64>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading matrix file {}", path.display()))?;
    parse_matrix(&text).with_context(|| format!("parsing matrix file {}", path.display()))
}

pub fn parse_matrix(text: &str) -> anyhow::Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
        rows.push(row.map_err(|e| anyhow::anyhow!("bad number: {e}"))?);
    }
    anyhow::ensure!(!rows.is_empty(), "matrix file is empty");
    let cols = rows[0].len();
    anyhow::ensure!(
        rows.iter().all(|r| r.len() == cols),
        "ragged rows in matrix file"
    );
    let data: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), cols, &data))
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> anyhow::Result<()> {
    let mut s = String::new();
    for r in 0..m.nrows() {
        let fields: Vec<String> = (0..m.ncols()).map(|c| fmt_f64(m[(r, c)])).collect();
        s.push_str(&fields.join(" "));
        s.push('\n');
    }
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

/// One observable on a 2-D grid, written row-major with axis headers.
/// Missing points are emitted as the explicit marker `MISSING` and reported
/// as an error so the run exits nonzero.
pub fn write_plot_matrix(
    path: &Path,
    observable: &str,
    axis1: (&str, &[f64]),
    axis2: (&str, &[f64]),
    values: &[Option<f64>],
) -> anyhow::Result<()> {
    anyhow::ensure!(values.len() == axis1.1.len() * axis2.1.len());
    let mut s = String::new();
    s.push_str(&format!("# observable: {observable}\n"));
    let fmt_axis = |name: &str, vals: &[f64]| {
        let vs: Vec<String> = vals.iter().map(|&v| fmt_f64(v)).collect();
        format!("{name} = {}", vs.join(" "))
    };
    s.push_str(&format!("# rows: {}\n", fmt_axis(axis1.0, axis1.1)));
    s.push_str(&format!("# cols: {}\n", fmt_axis(axis2.0, axis2.1)));
    let mut missing = 0usize;
    for i in 0..axis1.1.len() {
        let fields: Vec<String> = (0..axis2.1.len())
            .map(|j| match values[i * axis2.1.len() + j] {
                Some(v) => fmt_f64(v),
                None => {
                    missing += 1;
                    "MISSING".to_string()
                }
            })
            .collect();
        s.push_str(&fields.join(" "));
        s.push('\n');
    }
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))?;
    anyhow::ensure!(
        missing == 0,
        "{missing} grid points missing in {observable}; gap markers written"
    );
    Ok(())
}

/// Parse a plot-matrix file back into (axis1, axis2, row-major values).
pub fn read_plot_matrix(path: &Path) -> anyhow::Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let text = fs::read_to_string(path)?;
    let mut axis1 = Vec::new();
    let mut axis2 = Vec::new();
    let mut values = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# rows:") {
            axis1 = parse_axis_line(rest)?;
        } else if let Some(rest) = line.strip_prefix("# cols:") {
            axis2 = parse_axis_line(rest)?;
        } else if line.starts_with('#') || line.trim().is_empty() {
            continue;
        } else {
            for tok in line.split_whitespace() {
                anyhow::ensure!(tok != "MISSING", "plot file contains gap markers");
                values.push(tok.parse::<f64>()?);
            }
        }
    }
    anyhow::ensure!(values.len() == axis1.len() * axis2.len(), "plot shape mismatch");
    Ok((axis1, axis2, values))
}

fn parse_axis_line(rest: &str) -> anyhow::Result<Vec<f64>> {
    let vals = rest
        .split('=')
        .nth(1)
        .ok_or_else(|| anyhow::anyhow!("axis header missing '='"))?;
    vals.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(Into::into))
        .collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Companion metadata written next to every run's outputs.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    /// Checksum over the resolved config JSON plus the crate version;
    /// reruns with a different checksum in place are flagged.
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub outputs: Vec<OutputEntry>,
    pub runtime_seconds: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub previous_checksum_mismatch: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
}

/// Accumulates output files for a run, then writes the manifest.
pub struct RunWriter {
    dir: PathBuf,
    entries: Vec<OutputEntry>,
}

impl RunWriter {
    pub fn new(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    /// Write bytes and record their checksum.
    pub fn write(&mut self, file: &str, contents: &str) -> anyhow::Result<PathBuf> {
        let path = self.dir.join(file);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.entries.push(OutputEntry {
            file: file.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(path)
    }

    /// Record a file written through another helper.
    pub fn record(&mut self, file: &str) -> anyhow::Result<()> {
        let bytes = fs::read(self.dir.join(file))?;
        self.entries.push(OutputEntry {
            file: file.to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    /// Write `manifest.json`. If a previous manifest exists with a different
    /// config checksum, the mismatch is flagged in the new manifest and on
    /// stderr.
    pub fn finish(
        self,
        experiment: &str,
        seed: u64,
        config: serde_json::Value,
        runtime_seconds: f64,
    ) -> anyhow::Result<()> {
        let version = env!("CARGO_PKG_VERSION").to_string();
        let config_text = serde_json::to_string(&config)?;
        let config_sha256 = sha256_hex(format!("{config_text}|{version}").as_bytes());
        let manifest_path = self.dir.join("manifest.json");
        let mut previous_checksum_mismatch = false;
        if let Ok(old) = fs::read_to_string(&manifest_path) {
            if let Ok(old) = serde_json::from_str::<Manifest>(&old) {
                if old.config_sha256 != config_sha256 {
                    previous_checksum_mismatch = true;
                    eprintln!(
                        "warning: output directory {} holds results from a different config/version; overwriting",
                        self.dir.display()
                    );
                }
            }
        }
        let manifest = Manifest {
            experiment: experiment.to_string(),
            version,
            seed,
            config_sha256,
            config,
            outputs: self.entries,
            runtime_seconds,
            previous_checksum_mismatch,
        };
        fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }
}
