//! Benchmark matrix: synthetic scenes × methods → mean SDR and RTF.

use std::io::Write;

use overiva_core::{Method, RunConfig};
use serde::{Deserialize, Serialize};

use crate::pipeline::{separate_signal, PipelineError, Threads};
use crate::simulate::{sdr, sdr_set, synthesize, MetricError, SceneError, SceneSpec};
use crate::stft::StftConfig;

/// One grid cell, as in `[{"K":1,"L":2,"M":4,"sinr":0}]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub sinr: f64,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub trials: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub duration_s: f64,
    pub rt60_ms: f64,
    pub sample_rate: u32,
    pub stft: StftConfig,
    /// Iteration override; `None` uses each method's default.
    pub iterations: Option<usize>,
    pub eps1: f64,
    pub eps2: f64,
    /// Measure wall time; without it `mean_rtf` is left empty.
    pub timed: bool,
    pub threads: Threads,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            trials: 10,
            methods: Method::ALL.to_vec(),
            seed: 0,
            duration_s: 10.0,
            rt60_ms: 300.0,
            sample_rate: 16000,
            stft: StftConfig::default(),
            iterations: None,
            eps1: 1e-5,
            eps2: 1e-1,
            timed: true,
            threads: Threads::Single,
        }
    }
}

impl BenchConfig {
    pub fn run_config(&self, method: Method, parallel: bool) -> RunConfig {
        let mut cfg = RunConfig::new(method);
        if let Some(n) = self.iterations {
            cfg.iterations = n;
        }
        cfg.eps1 = self.eps1;
        cfg.eps2 = self.eps2;
        cfg.parallel = parallel;
        cfg.record_cost = false;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub sinr: f64,
    /// Method name, or `mixture` for the unprocessed input.
    pub method: String,
    pub mean_sdr: f64,
    pub mean_rtf: Option<f64>,
    pub trials: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("invalid benchmark: {0}")]
    Invalid(String),
    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
}

/// Per-trial measurements of one method in one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub sdr: f64,
    pub rtf: Option<f64>,
}

pub fn scene_spec(cell: &GridCell, cfg: &BenchConfig, trial: usize) -> SceneSpec {
    SceneSpec {
        k: cell.k,
        l: cell.l,
        m: cell.m,
        sinr_db: cell.sinr,
        rt60_ms: cfg.rt60_ms,
        sample_rate: cfg.sample_rate,
        duration_s: cfg.duration_s,
        seed: cfg.seed + trial as u64,
    }
}

/// Runs every method of `cfg` on `cfg.trials` scenes of one cell. The
/// first entry of the result is the mixture baseline. Methods that cannot
/// handle the cell (IP-2 with `K > 1`) are skipped.
pub fn run_cell(cell: &GridCell, cfg: &BenchConfig) -> Result<Vec<(String, Vec<TrialResult>)>, BenchError> {
    if cfg.trials == 0 {
        return Err(BenchError::Invalid("need at least one trial".into()));
    }
    let methods: Vec<Method> = cfg
        .methods
        .iter()
        .copied()
        .filter(|&m| {
            let ok = m != Method::Ip2 || cell.k == 1;
            if !ok {
                log::warn!("skipping ip2 for K={}", cell.k);
            }
            ok
        })
        .collect();
    let mut out: Vec<(String, Vec<TrialResult>)> = Vec::new();
    out.push(("mixture".into(), Vec::new()));
    out.extend(methods.iter().map(|m| (m.name().to_string(), Vec::new())));

    for trial in 0..cfg.trials {
        let scene = synthesize(&scene_spec(cell, cfg, trial), None)?;
        let mut mix_sdr = 0.0;
        for target in &scene.target_images {
            mix_sdr += sdr(target, &scene.mixture)?;
        }
        out[0].1.push(TrialResult {
            sdr: mix_sdr / cell.k as f64,
            rtf: None,
        });
        for (slot, &method) in methods.iter().enumerate() {
            let sep = cfg.threads.install(|parallel| {
                separate_signal(
                    &scene.mixture,
                    cfg.sample_rate,
                    cell.k,
                    &cfg.stft,
                    &cfg.run_config(method, parallel),
                    cfg.timed,
                )
            })??;
            let score = sdr_set(&scene.target_images, &sep.images)?;
            log::info!(
                "K={} L={} M={} sinr={} trial {trial} {method}: SDR {:.2} dB",
                cell.k,
                cell.l,
                cell.m,
                cell.sinr,
                score.mean
            );
            out[slot + 1].1.push(TrialResult {
                sdr: score.mean,
                rtf: sep.rtf,
            });
        }
    }
    Ok(out)
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

pub fn summarize(cell: &GridCell, results: &[(String, Vec<TrialResult>)]) -> Vec<BenchRow> {
    results
        .iter()
        .map(|(method, trials)| {
            let rtf = if method != "mixture" && trials.iter().all(|t| t.rtf.is_some()) {
                Some(mean(trials.iter().filter_map(|t| t.rtf)))
            } else {
                None
            };
            BenchRow {
                k: cell.k,
                l: cell.l,
                m: cell.m,
                sinr: cell.sinr,
                method: method.clone(),
                mean_sdr: mean(trials.iter().map(|t| t.sdr)),
                mean_rtf: rtf,
                trials: trials.len(),
            }
        })
        .collect()
}

pub fn run_bench(grid: &[GridCell], cfg: &BenchConfig) -> Result<Vec<BenchRow>, BenchError> {
    let mut rows = Vec::new();
    for cell in grid {
        rows.extend(summarize(cell, &run_cell(cell, cfg)?));
    }
    Ok(rows)
}

pub fn parse_grid(text: &str) -> Result<Vec<GridCell>, serde_json::Error> {
    serde_json::from_str(text)
}

/// CSV with header `K,L,M,sinr,method,mean_sdr,mean_rtf,trials`.
pub fn write_csv<W: Write>(out: W, rows: &[BenchRow]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
