//! Score records and the benchmark table.
//!
//! One [`EvalRecord`] holds the two quality measures of one restored (or
//! raw noisy) image against the speckle-free reference. The table groups
//! records as methods × look counts — noisy baseline first, then the L1,
//! TV and Cauchy rows — averaging over seeds, and is emitted twice: as
//! aligned text for the eye and as delimiter-separated values for
//! machines. Both forms are deterministic: records are sorted into a
//! canonical order before formatting.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ReportFormat;
use crate::{write_err, CliResult};

/// Scores of one estimate image against the clean reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    /// `noisy` for the unprocessed baseline, otherwise the regulariser
    /// name.
    pub method: String,
    pub looks: u32,
    pub seed: u64,
    pub psnr_db: f64,
    pub smse_db: f64,
}

/// Row order of the table: baseline first, then the penalties in the
/// conventional benchmark order, unknown labels last alphabetically.
fn method_rank(method: &str) -> (u8, &str) {
    match method {
        "noisy" => (0, method),
        "l1" => (1, method),
        "tv" => (2, method),
        "cauchy" => (3, method),
        other => (4, other),
    }
}

/// A bag of records with canonical ordering and the two output forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub records: Vec<EvalRecord>,
}

impl BenchmarkReport {
    pub fn new(mut records: Vec<EvalRecord>) -> Self {
        records.sort_by(|a, b| {
            let ka = (method_rank(&a.method), a.looks, a.seed);
            let kb = (method_rank(&b.method), b.looks, b.seed);
            ka.cmp(&kb)
        });
        Self { records }
    }

    /// Methods present, in row order.
    pub fn methods(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.method) {
                out.push(r.method.clone());
            }
        }
        out
    }

    /// Look counts present, ascending.
    pub fn looks(&self) -> Vec<u32> {
        let mut out: Vec<u32> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.looks) {
                out.push(r.looks);
            }
        }
        out.sort_unstable();
        out
    }

    /// Seeds present, ascending.
    pub fn seeds(&self) -> Vec<u64> {
        let mut out: Vec<u64> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.seed) {
                out.push(r.seed);
            }
        }
        out.sort_unstable();
        out
    }

    /// Mean (PSNR, S/MSE) over seeds for one table cell.
    pub fn mean_cell(&self, method: &str, looks: u32) -> Option<(f64, f64)> {
        let cell: Vec<&EvalRecord> = self
            .records
            .iter()
            .filter(|r| r.method == method && r.looks == looks)
            .collect();
        if cell.is_empty() {
            return None;
        }
        let n = cell.len() as f64;
        let psnr = cell.iter().map(|r| r.psnr_db).sum::<f64>() / n;
        let smse = cell.iter().map(|r| r.smse_db).sum::<f64>() / n;
        Some((psnr, smse))
    }

    /// The aligned text table (methods × looks, two measures per look).
    pub fn aligned_table(&self) -> String {
        let looks = self.looks();
        let seeds = self.seeds();
        let methods = self.methods();
        let name_width = methods.iter().map(|m| m.len()).chain([6]).max().unwrap_or(6);

        let mut out = String::new();
        let seed_list =
            seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ");
        let _ = writeln!(
            out,
            "despeckling benchmark — mean over {} seed{} ({seed_list})",
            seeds.len(),
            if seeds.len() == 1 { "" } else { "s" },
        );
        out.push('\n');

        let _ = write!(out, "{:<name_width$}", "method");
        for l in &looks {
            let _ = write!(out, " | {:>10} {:>10}", format!("PSNR L={l}"), format!("S/MSE L={l}"));
        }
        out.push('\n');
        let _ = write!(out, "{:-<name_width$}", "");
        for _ in &looks {
            let _ = write!(out, "-+-{:->10}-{:->10}", "", "");
        }
        out.push('\n');

        for m in &methods {
            let _ = write!(out, "{m:<name_width$}");
            for &l in &looks {
                match self.mean_cell(m, l) {
                    Some((psnr, smse)) => {
                        let _ = write!(out, " | {psnr:>10.3} {smse:>10.3}");
                    }
                    None => {
                        let _ = write!(out, " | {:>10} {:>10}", "n/a", "n/a");
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    /// Per-record delimiter-separated values (one line per seed, not
    /// averaged).
    pub fn dsv(&self) -> String {
        let mut out = String::from("method,looks,seed,psnr_db,smse_db\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.6}",
                r.method, r.looks, r.seed, r.psnr_db, r.smse_db
            );
        }
        out
    }

    /// Write `report.txt` / `report.csv` into `dir` per the format choice.
    pub fn write(&self, dir: &Path, format: ReportFormat) -> CliResult<Vec<PathBuf>> {
        let mut wrote = Vec::new();
        if matches!(format, ReportFormat::Text | ReportFormat::Both) {
            let path = dir.join("report.txt");
            fs::write(&path, self.aligned_table()).map_err(|e| write_err(&path, e))?;
            wrote.push(path);
        }
        if matches!(format, ReportFormat::Dsv | ReportFormat::Both) {
            let path = dir.join("report.csv");
            fs::write(&path, self.dsv()).map_err(|e| write_err(&path, e))?;
            wrote.push(path);
        }
        Ok(wrote)
    }
}
