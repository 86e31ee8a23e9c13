//! Summaries, best-cell selection, and the on-disk layout of sweep results.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::runner::{SweepResult, SEED_RULE};
use crate::error::{Error, Result};

pub const RUN_HEADER: [&str; 5] = ["step_or_episode", "return_or_J", "entropy", "baseline_value", "wall_ms"];

pub const SUMMARY_HEADER: [&str; 14] = [
    "cell",
    "group",
    "estimator",
    "baseline",
    "baseline_init",
    "alpha",
    "beta",
    "tau",
    "grad_noise",
    "policy",
    "window",
    "runs",
    "mean",
    "se",
];

pub const BEST_HEADER: [&str; 7] = ["window", "group", "cell", "alpha", "beta", "mean", "se"];

pub const TIE_BREAK: &str = "highest window mean per group; ties go to the smaller alpha, then the smaller beta";

/// Mean and standard error over runs of one cell's window means.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub cell: usize,
    pub window: String,
    /// Runs with at least one row in the window.
    pub runs: usize,
    pub mean: f64,
    /// Sample standard deviation over `√runs`; `None` for a single run.
    pub se: Option<f64>,
}

pub fn mean_and_se(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some((var / n).sqrt()))
}

/// One row per (cell, window), cells in grid order.
pub fn summarize(result: &SweepResult) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for (i, cell) in result.cells.iter().enumerate() {
        for w in &result.windows {
            let per_run: Vec<f64> = cell.runs.iter().filter_map(|r| w.mean(&r.rows)).collect();
            if per_run.is_empty() {
                rows.push(SummaryRow {
                    cell: i,
                    window: w.name.clone(),
                    runs: 0,
                    mean: f64::NAN,
                    se: None,
                });
                continue;
            }
            let (mean, se) = mean_and_se(&per_run);
            rows.push(SummaryRow {
                cell: i,
                window: w.name.clone(),
                runs: per_run.len(),
                mean,
                se,
            });
        }
    }
    rows
}

/// Best cell of each group for each window.
pub fn best_cells<'a>(result: &SweepResult, summary: &'a [SummaryRow]) -> Vec<&'a SummaryRow> {
    let mut best: Vec<&SummaryRow> = Vec::new();
    for row in summary.iter().filter(|r| !r.mean.is_nan()) {
        let cell = &result.cells[row.cell].cell;
        let slot = best.iter_mut().find(|b| {
            b.window == row.window && result.cells[b.cell].cell.group == cell.group
        });
        match slot {
            None => best.push(row),
            Some(b) => {
                let incumbent = &result.cells[b.cell].cell;
                let key = |c: &super::Cell| (c.alpha, c.beta().unwrap_or(0.0));
                let better = row.mean > b.mean
                    || (row.mean == b.mean && key(cell) < key(incumbent));
                if better {
                    *b = row;
                }
            }
        }
    }
    best
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_bytes<I, R>(header: &[&str], records: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in records {
        w.write_record(r)?;
    }
    w.into_inner()
        .map_err(|e| Error::io("<csv buffer>", e.into_error()))
}

/// Writes `bytes` to a temporary sibling and renames it into place, so a
/// reader never sees a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn run_csv(rows: &[super::LogRow]) -> Result<Vec<u8>> {
    csv_bytes(
        &RUN_HEADER,
        rows.iter().map(|r| {
            [
                r.step.to_string(),
                r.value.to_string(),
                fmt_opt(r.entropy),
                r.baseline.to_string(),
                fmt_opt(r.wall_ms),
            ]
        }),
    )
}

pub fn summary_csv(result: &SweepResult, summary: &[SummaryRow]) -> Result<Vec<u8>> {
    csv_bytes(
        &SUMMARY_HEADER,
        summary.iter().map(|s| {
            let c = &result.cells[s.cell].cell;
            [
                c.label.clone(),
                c.group.clone(),
                c.estimator.to_string(),
                c.baseline_label().to_string(),
                fmt_opt(c.baseline_init()),
                c.alpha.to_string(),
                fmt_opt(c.beta()),
                c.tau.to_string(),
                c.grad_noise.to_string(),
                c.policy_label(),
                s.window.clone(),
                s.runs.to_string(),
                if s.mean.is_nan() { String::new() } else { s.mean.to_string() },
                fmt_opt(s.se),
            ]
        }),
    )
}

pub fn best_csv(result: &SweepResult, best: &[&SummaryRow]) -> Result<Vec<u8>> {
    csv_bytes(
        &BEST_HEADER,
        best.iter().map(|s| {
            let c = &result.cells[s.cell].cell;
            [
                s.window.clone(),
                c.group.clone(),
                c.label.clone(),
                c.alpha.to_string(),
                fmt_opt(c.beta()),
                s.mean.to_string(),
                fmt_opt(s.se),
            ]
        }),
    )
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Flat `key=value` manifest lines.
pub fn manifest(entries: &[(&str, String)]) -> Vec<u8> {
    let mut out = String::new();
    for (k, v) in entries {
        out.push_str(k);
        out.push('=');
        out.push_str(&v.replace('\n', " "));
        out.push('\n');
    }
    out.into_bytes()
}

pub fn code_version() -> String {
    format!("altgrad {}", env!("CARGO_PKG_VERSION"))
}

/// Writes `{out}/{name}/{cell}/{run}.csv`, then `summary.csv`, `best.csv`
/// and `manifest.txt`. The summary is written only after every run log.
pub fn write_sweep(result: &SweepResult, out: &Path, config_text: &str, extra: &[(&str, String)]) -> Result<PathBuf> {
    let root = out.join(&result.name);
    for cell in &result.cells {
        for run in &cell.runs {
            let path = root.join(&cell.cell.label).join(format!("{}.csv", run.run));
            write_atomic(&path, &run_csv(&run.rows)?)?;
        }
    }
    let summary = summarize(result);
    let best = best_cells(result, &summary);
    write_atomic(&root.join("summary.csv"), &summary_csv(result, &summary)?)?;
    write_atomic(&root.join("best.csv"), &best_csv(result, &best)?)?;

    let runs = result.cells.first().map_or(0, |c| c.runs.len());
    let mut entries = vec![
        ("command", result.command.name().to_string()),
        ("name", result.name.clone()),
        ("code_version", code_version()),
        ("config_sha256", sha256_hex(config_text.as_bytes())),
        ("base_seed", result.base_seed.to_string()),
        ("runs", runs.to_string()),
        ("cells", result.cells.len().to_string()),
        ("seed_rule", SEED_RULE.to_string()),
        ("best_selection", TIE_BREAK.to_string()),
    ];
    let window_keys: Vec<String> = result.windows.iter().map(|w| format!("window.{}", w.name)).collect();
    for (w, key) in result.windows.iter().zip(&window_keys) {
        entries.push((key.as_str(), w.describe()));
    }
    entries.extend(extra.iter().cloned());
    write_atomic(&root.join("manifest.txt"), &manifest(&entries))?;
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_error_by_hand() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        // sample variance 5/3, se = sqrt(5/12)
        assert!((se.unwrap() - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_and_se(&[7.0]), (7.0, None));
    }

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a/b/file.csv");
        write_atomic(&path, b"x,y\n").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"x,y\n");
        assert!(!dir.path().join("a/b/file.csv.tmp").exists());
    }

    #[test]
    fn manifest_is_flat() {
        let m = manifest(&[("a", "1".into()), ("b", "two\nlines".into())]);
        assert_eq!(String::from_utf8(m).unwrap(), "a=1\nb=two lines\n");
    }
}
