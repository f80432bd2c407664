//! JSON report written by `overiva separate`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: String,
    pub iters: usize,
    pub iterations_run: usize,
    pub cost_trace: Vec<f64>,
    /// `null` when timing is disabled.
    pub rtf: Option<f64>,
    pub wall_time_s: Option<f64>,
    /// Output indices kept (only differs from `0..K` for AuxIVA).
    pub selected: Vec<usize>,
    pub config: ReportConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub input: String,
    pub sources: usize,
    pub channels: usize,
    pub sample_rate: u32,
    pub frame_len: usize,
    pub hop: usize,
    pub eps1: f64,
    pub eps2: f64,
    pub relative_ridge: bool,
    pub wz_update: String,
    pub threads: String,
}
