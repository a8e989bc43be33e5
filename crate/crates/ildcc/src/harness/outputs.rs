//! Result rows and file emission for experiment runs.
//!
//! Every CSV except `timings.csv` is byte-identical across runs with the
//! same configuration and master seed; wall-clock time therefore lives
//! in its own file and is skipped during row serialization.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::abc::GenerationStat;
use crate::error::Result;

/// One optimization (or baseline sampling) run at a fixed network size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub method: String,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    /// "ok", or the reason the trial produced no accepted placement.
    pub status: String,
    pub budget: usize,
    pub fprn_count: usize,
    pub sprn_count: usize,
    pub network_size: usize,
    pub wiener: f64,
    pub mu: f64,
    pub mu_w: f64,
    pub mu_w_norm: f64,
    /// Widened mean distance scaled to meters by the cell edge.
    pub mu_w_m: f64,
    pub lambda2: f64,
    pub lambda2_backbone: f64,
    pub e_p: f64,
    pub i_r: f64,
    pub t_r: f64,
    pub e_extra: f64,
    pub evaluations: usize,
    #[serde(skip)]
    pub wallclock_s: f64,
}

impl TrialResult {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Per-(method, size) summary over the accepted trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: String,
    pub n: usize,
    pub trials_ok: usize,
    pub trials_failed: usize,
    pub mean_wiener: f64,
    pub std_wiener: f64,
    pub mean_mu_w: f64,
    pub std_mu_w: f64,
    pub mean_mu_w_norm: f64,
    pub std_mu_w_norm: f64,
    pub mean_lambda2: f64,
    pub std_lambda2: f64,
    pub mean_sprn: f64,
    pub mean_e_p: f64,
    pub mean_i_r: f64,
    pub mean_t_r: f64,
    pub std_t_r: f64,
    pub mean_e_extra: f64,
}

/// Mean lifetime at one receive-traffic multiplier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficRow {
    pub method: String,
    pub n: usize,
    pub traffic_k: f64,
    pub trials_ok: usize,
    pub mean_t_r: f64,
    pub std_t_r: f64,
}

/// Wall-clock seconds for one trial; the only non-deterministic output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingRow {
    pub method: String,
    pub n: usize,
    pub trial: usize,
    pub wallclock_s: f64,
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results(dir: &Path, rows: &[TrialResult]) -> Result<PathBuf> {
    let path = dir.join("results.csv");
    write_csv(&path, rows)?;
    Ok(path)
}

pub fn read_results(path: &Path) -> Result<Vec<TrialResult>> {
    let mut rows = Vec::new();
    for row in csv::Reader::from_path(path)?.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

pub fn write_aggregates(dir: &Path, rows: &[AggregateRow]) -> Result<PathBuf> {
    let path = dir.join("aggregate.csv");
    write_csv(&path, rows)?;
    Ok(path)
}

pub fn write_traffic(dir: &Path, rows: &[TrafficRow]) -> Result<PathBuf> {
    let path = dir.join("plotdata_tr_vs_load.csv");
    write_csv(&path, rows)?;
    Ok(path)
}

pub fn write_timings(dir: &Path, rows: &[TimingRow]) -> Result<PathBuf> {
    let path = dir.join("timings.csv");
    write_csv(&path, rows)?;
    Ok(path)
}

pub fn write_convergence(
    dir: &Path,
    n: usize,
    trial: usize,
    history: &[GenerationStat<f64>],
) -> Result<PathBuf> {
    let path = dir.join(format!("convergence_{n}_{trial}.csv"));
    write_csv(&path, history)?;
    Ok(path)
}

#[derive(Debug, Serialize)]
struct SeriesRow<'a> {
    method: &'a str,
    n: usize,
    mean: f64,
    std: f64,
}

fn write_series(
    dir: &Path,
    name: &str,
    rows: &[AggregateRow],
    pick: impl Fn(&AggregateRow) -> (f64, f64),
) -> Result<PathBuf> {
    let path = dir.join(name);
    let series: Vec<SeriesRow> = rows
        .iter()
        .map(|r| {
            let (mean, std) = pick(r);
            SeriesRow { method: &r.method, n: r.n, mean, std }
        })
        .collect();
    write_csv(&path, &series)?;
    Ok(path)
}

/// Writes the per-size plot series derived from the aggregate table.
pub fn write_plot_series(dir: &Path, rows: &[AggregateRow]) -> Result<Vec<PathBuf>> {
    Ok(vec![
        write_series(dir, "plotdata_mu_vs_n.csv", rows, |r| {
            (r.mean_mu_w_norm, r.std_mu_w_norm)
        })?,
        write_series(dir, "plotdata_tr_vs_n.csv", rows, |r| (r.mean_t_r, r.std_t_r))?,
        write_series(dir, "plotdata_lambda2_vs_n.csv", rows, |r| {
            (r.mean_lambda2, r.std_lambda2)
        })?,
    ])
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}
