//! `fscil report`: median tables and curve data from results files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use fscil_core::protocol::{median, metric_avg, metric_pd};

use crate::error::{CliError, CliResult, Context};
use crate::results::{ResultRow, RESULT_FIELDS};

/// One table row: medians over seeds for a (method, K) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: String,
    pub k: usize,
    pub seeds: usize,
    pub accuracies: Vec<f64>,
    pub avg: f64,
    pub pd: f64,
}

/// Reads one results file, checking the header and every field.
pub fn read_results(path: &Path) -> CliResult<Vec<ResultRow>> {
    let where_ = path.display().to_string();
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::data(anyhow!("{where_}: {e}")))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::data(anyhow!("{where_}: {e}")))?
        .clone();
    for field in RESULT_FIELDS {
        if !headers.iter().any(|h| h == field) {
            return Err(CliError::data(anyhow!("{where_}: missing field `{field}`")));
        }
    }
    if let Some(extra) = headers.iter().find(|h| !RESULT_FIELDS.contains(h)) {
        return Err(CliError::data(anyhow!("{where_}: unexpected field `{extra}`")));
    }
    if headers.iter().ne(RESULT_FIELDS) {
        return Err(CliError::data(anyhow!("{where_}: fields out of order, expected {}", RESULT_FIELDS.join(","))));
    }
    let mut rows = Vec::new();
    for record in reader.deserialize::<ResultRow>() {
        let row = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            let field = match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => err.field().and_then(|i| RESULT_FIELDS.get(i as usize).copied()),
                _ => None,
            };
            match field {
                Some(f) => CliError::data(anyhow!("{where_}, line {line}: field `{f}`: {e}")),
                None => CliError::data(anyhow!("{where_}, line {line}: {e}")),
            }
        })?;
        if !row.accuracy.is_finite() {
            return Err(CliError::data(anyhow!("{where_}: field `accuracy` is not finite")));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Feature dimension recorded in the manifest next to a results file.
fn recorded_dim(path: &Path) -> CliResult<Option<u64>> {
    let manifest = path.with_file_name("manifest.json");
    if !manifest.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&manifest)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::data(anyhow!("{}: {e}", manifest.display())))?;
    match value.get("feature_dim") {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .map(Some)
            .ok_or_else(|| CliError::data(anyhow!("{}: field `feature_dim` is not an integer", manifest.display()))),
    }
}

/// Builds the median table from one or more results files.
pub fn build_report(paths: &[PathBuf]) -> CliResult<Vec<ReportRow>> {
    if paths.is_empty() {
        return Err(CliError::config(anyhow!("report needs at least one results file")));
    }
    let mut dim: Option<(u64, &Path)> = None;
    // (method, K) in first-seen order -> seed -> session -> accuracy
    let mut groups: Vec<((String, usize), BTreeMap<u64, BTreeMap<usize, f64>>)> = Vec::new();
    for path in paths {
        if let Some(d) = recorded_dim(path)? {
            match dim {
                Some((prev, first)) if prev != d => {
                    return Err(CliError::data(anyhow!(
                        "{}: field `feature_dim` is {d} but {} has {prev}; refusing to mix feature dimensions",
                        path.display(),
                        first.display()
                    )))
                }
                None => dim = Some((d, path)),
                _ => {}
            }
        }
        for row in read_results(path)? {
            let key = (row.method.clone(), row.k);
            let idx = match groups.iter().position(|(k, _)| *k == key) {
                Some(i) => i,
                None => {
                    groups.push((key, BTreeMap::new()));
                    groups.len() - 1
                }
            };
            let sessions = groups[idx].1.entry(row.seed).or_default();
            if sessions.insert(row.session, row.accuracy).is_some() {
                return Err(CliError::data(anyhow!(
                    "{}: duplicate row for {} seed {} K {} session {}",
                    path.display(),
                    row.method,
                    row.seed,
                    row.k,
                    row.session
                )));
            }
        }
    }
    groups
        .into_iter()
        .map(|((method, k), seeds)| {
            let mut runs = Vec::new();
            for (seed, sessions) in &seeds {
                if sessions.keys().copied().ne(0..sessions.len()) {
                    return Err(CliError::data(anyhow!(
                        "{method} seed {seed} K {k}: field `session` is not contiguous from 0"
                    )));
                }
                runs.push(sessions.values().copied().collect::<Vec<_>>());
            }
            let n = runs[0].len();
            if runs.iter().any(|r| r.len() != n) {
                return Err(CliError::data(anyhow!("{method} K {k}: seeds have different session counts")));
            }
            let accuracies = (0..n)
                .map(|t| median(&runs.iter().map(|r| r[t]).collect::<Vec<_>>()))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(ReportRow {
                avg: metric_avg(&accuracies)?,
                pd: metric_pd(&accuracies)?,
                method,
                k,
                seeds: runs.len(),
                accuracies,
            })
        })
        .collect()
}

/// Fixed-width text table, one row per (method, K).
pub fn render_table(rows: &[ReportRow]) -> String {
    let width = rows.iter().map(|r| r.method.len()).max().unwrap_or(6).max(6);
    let sessions = rows.iter().map(|r| r.accuracies.len()).max().unwrap_or(0);
    let mut out = String::new();
    let _ = write!(out, "{:<width$} {:>3} {:>5}", "method", "K", "seeds");
    for t in 0..sessions {
        let _ = write!(out, " {:>6}", format!("S{t}"));
    }
    let _ = writeln!(out, " {:>6} {:>6}", "Avg", "PD");
    for r in rows {
        let _ = write!(out, "{:<width$} {:>3} {:>5}", r.method, r.k, r.seeds);
        for t in 0..sessions {
            match r.accuracies.get(t) {
                Some(a) => {
                    let _ = write!(out, " {a:>6.2}");
                }
                None => {
                    let _ = write!(out, " {:>6}", "-");
                }
            }
        }
        let _ = writeln!(out, " {:>6.2} {:>6.2}", r.avg, r.pd);
    }
    out
}

/// Session-by-session medians as comma-separated values.
pub fn render_curves(rows: &[ReportRow]) -> String {
    let mut out = String::from("method,K,session,accuracy\n");
    for r in rows {
        for (t, a) in r.accuracies.iter().enumerate() {
            let _ = writeln!(out, "{},{},{t},{a:.2}", r.method, r.k);
        }
    }
    out
}

/// Prints the table to standard output, and with `out` also writes
/// `report.txt` and `curves.csv` there.
pub fn cmd_report(paths: &[PathBuf], out: Option<&Path>) -> CliResult<String> {
    let rows = build_report(paths)?;
    let table = render_table(&rows);
    if let Some(dir) = out {
        fs::create_dir_all(dir).ctx(format!("cannot create {}", dir.display()))?;
        fs::write(dir.join("report.txt"), &table)?;
        fs::write(dir.join("curves.csv"), render_curves(&rows))?;
    }
    Ok(table)
}
