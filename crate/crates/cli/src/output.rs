//! CSV rows and the plain-text summary.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::experiments::Report;

pub const CSV_HEADER: [&str; 7] = ["experiment", "n", "metric", "target", "value", "stderr", "seed"];

/// `<out>.<extension>`, appended rather than substituted.
fn with_suffix(out: &Path, extension: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".");
    s.push(extension);
    PathBuf::from(s)
}

pub fn csv_path(out: &Path) -> PathBuf {
    with_suffix(out, "csv")
}

pub fn summary_path(out: &Path) -> PathBuf {
    with_suffix(out, "summary.txt")
}

pub fn write_csv<W: Write>(out: W, report: &Report) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let (experiment, seed) = (report.experiment.as_str(), report.seed.to_string());
    for row in &report.rows {
        let stderr = row.stderr.map(|s| s.to_string()).unwrap_or_default();
        w.write_record([
            experiment,
            &row.n.to_string(),
            &row.metric,
            &row.target.to_string(),
            &row.value.to_string(),
            &stderr,
            &seed,
        ])?;
    }
    w.flush()
}

pub fn write_summary<W: Write>(mut out: W, report: &Report, cfg: &ExperimentConfig) -> io::Result<()> {
    writeln!(out, "experiment: {}", report.experiment)?;
    writeln!(out, "seed: {}", report.seed)?;
    if let Some(d) = &cfg.dist {
        writeln!(out, "dist: {d}")?;
    }
    if let Some(s) = &cfg.spec {
        writeln!(out, "spec: {}", s.name)?;
    }
    let n: Vec<String> = cfg.n_list.iter().map(u64::to_string).collect();
    writeln!(out, "n: {}", n.join(","))?;
    writeln!(out, "samples: {}", cfg.samples)?;
    writeln!(out, "rows: {}", report.rows.len())?;
    writeln!(out)?;
    for c in &report.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        let level = if c.hard { "hard" } else { "soft" };
        writeln!(out, "{verdict} [{level}] {}: {}", c.name, c.detail)?;
    }
    writeln!(out)?;
    writeln!(
        out,
        "status: {} ({} hard failures, {} soft failures)",
        if report.passed() { "ok" } else { "failed" },
        report.hard_failures(),
        report.soft_failures()
    )
}

/// Writes `<out>.csv` and `<out>.summary.txt`, creating parent directories.
pub fn write_outputs(report: &Report, cfg: &ExperimentConfig) -> Result<(PathBuf, PathBuf), (PathBuf, io::Error)> {
    let csv = csv_path(&cfg.out);
    let summary = summary_path(&cfg.out);
    if let Some(dir) = csv.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| (dir.to_path_buf(), e))?;
    }
    let write = |path: &Path, f: &dyn Fn(&mut BufWriter<File>) -> io::Result<()>| -> Result<(), (PathBuf, io::Error)> {
        let file = File::create(path).map_err(|e| (path.to_path_buf(), e))?;
        let mut w = BufWriter::new(file);
        f(&mut w).and_then(|_| w.flush()).map_err(|e| (path.to_path_buf(), e))
    };
    write(&csv, &|w| write_csv(w, report))?;
    write(&summary, &|w| write_summary(w, report, cfg))?;
    Ok((csv, summary))
}
