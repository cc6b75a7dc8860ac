//! CSV and JSON writers for run reports and datasets.
//!
//! All numeric output uses the shortest round-trip decimal form, so the same
//! report always produces the same bytes. Wall-clock data goes only to the
//! `meta.json` sidecar.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use pnn_core::signal::Dataset;
use pnn_core::trainer::{RunReport, Scenario, LOSS_FLOOR};
use serde::Serialize;

use crate::config::ConfigFile;
use crate::error::{HarnessError, Result};

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| HarnessError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

/// `iteration,mse,corr`.
pub fn write_loss(path: &Path, report: &RunReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["iteration", "mse", "corr"])?;
    w.write_record(["0".to_string(), num(report.initial_loss), opt(report.initial_corr)])?;
    for r in &report.loss_history {
        w.write_record([r.iteration.to_string(), num(r.mse), opt(r.corr)])?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// `m,k,checkpoint,n1`, 1-based variable and synapse labels.
pub fn write_snapshots(path: &Path, report: &RunReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["m", "k", "checkpoint", "n1"])?;
    for c in &report.checkpoints {
        for (m, row) in c.n1.iter().enumerate() {
            for (k, n) in row.iter().enumerate() {
                w.write_record([
                    (m + 1).to_string(),
                    (k + 1).to_string(),
                    c.iteration.to_string(),
                    n.to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// `t,f,h` for the final state.
pub fn write_trajectory(path: &Path, report: &RunReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "f", "h"])?;
    for (t, (f, h)) in report.targets.iter().zip(&report.final_h).enumerate() {
        w.write_record([(t + 1).to_string(), num(*f), num(*h)])?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// `iteration,log10_mse,floored`; a zero loss is written as the log of the floor
/// with `floored = 1`.
pub fn write_plot(path: &Path, report: &RunReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["iteration", "log10_mse", "floored"])?;
    for r in &report.loss_history {
        let floored = r.mse < LOSS_FLOOR;
        let value = r.mse.max(LOSS_FLOOR).log10();
        w.write_record([r.iteration.to_string(), num(value), u8::from(floored).to_string()])?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// `t,x1..xM,f`.
pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=dataset.m_max()).map(|m| format!("x{m}")));
    header.push("f".into());
    w.write_record(&header)?;
    for t in 1..=dataset.window_length() {
        let mut row = vec![t.to_string()];
        row.extend((0..dataset.m_max()).map(|m| num(dataset.x(m, t))));
        row.push(num(dataset.f(t)));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// `t,y`, with `t` starting at 0.
pub fn write_signal(path: &Path, y: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "y"])?;
    for (t, v) in y.iter().enumerate() {
        w.write_record([t.to_string(), num(*v)])?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut buf = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut buf, value)?;
    buf.write_all(b"\n").map_err(|e| HarnessError::io(path, e))?;
    buf.flush().map_err(|e| HarnessError::io(path, e))
}

/// Every per-run file into `dir`.
pub fn write_run(dir: &Path, report: &RunReport, scenario: Option<Scenario>) -> Result<()> {
    create_dir(dir)?;
    write_text(&dir.join("config.toml"), &ConfigFile::echo(&report.config, scenario).to_text()?)?;
    write_loss(&dir.join("loss.csv"), report)?;
    write_snapshots(&dir.join("snapshots.csv"), report)?;
    write_trajectory(&dir.join("trajectory.csv"), report)?;
    write_plot(&dir.join("plot.csv"), report)?;
    write_json(&dir.join("report.json"), report)
}

#[derive(Serialize)]
struct Meta<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a [String],
    finished_unix_secs: u64,
    elapsed_secs: f64,
}

/// Timestamp sidecar, the only non-reproducible output.
pub fn write_meta(dir: &Path, command: &[String], elapsed_secs: f64) -> Result<()> {
    let finished_unix_secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    write_json(
        &dir.join("meta.json"),
        &Meta {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            finished_unix_secs,
            elapsed_secs,
        },
    )
}
