//! Time-domain separation: STFT, optimizer, projection back, inverse STFT.

use std::time::Instant;

use overiva_core::{run_with, CMatrix, NoHooks, RunConfig, RunHooks, SeparationResult};

use crate::stft::{istft, stft, StftConfig, StftError};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Stft(#[from] StftError),
    #[error(transparent)]
    Separation(#[from] overiva_core::Error),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// Monotonic clock for [`RunHooks`].
#[derive(Debug, Clone, Copy)]
pub struct WallClock(Instant);

impl Default for WallClock {
    fn default() -> Self {
        Self(Instant::now())
    }
}

impl RunHooks for WallClock {
    fn now(&mut self) -> Option<f64> {
        Some(self.0.elapsed().as_secs_f64())
    }
}

/// Forwards the clock of `T` while letting a closure observe `W_z` updates.
pub struct Observed<T, F> {
    pub inner: T,
    pub observer: F,
}

impl<T: RunHooks, F: FnMut(usize, usize, &CMatrix, &CMatrix)> RunHooks for Observed<T, F> {
    fn now(&mut self) -> Option<f64> {
        self.inner.now()
    }

    fn observes_wz(&self) -> bool {
        true
    }

    fn after_wz_update(&mut self, iteration: usize, bin: usize, w: &CMatrix, gz: &CMatrix) {
        (self.observer)(iteration, bin, w, gz)
    }
}

/// Worker threads for the per-bin sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Threads {
    #[default]
    Single,
    Count(usize),
    /// One per available core.
    Auto,
}

impl std::str::FromStr for Threads {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Threads::Auto);
        }
        match s.parse::<usize>() {
            Ok(0) | Err(_) => Err(format!("expected a positive thread count or 'auto', got '{s}'")),
            Ok(1) => Ok(Threads::Single),
            Ok(n) => Ok(Threads::Count(n)),
        }
    }
}

impl std::fmt::Display for Threads {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Threads::Single => write!(f, "1"),
            Threads::Count(n) => write!(f, "{n}"),
            Threads::Auto => write!(f, "auto"),
        }
    }
}

impl Threads {
    /// Runs `job` with `parallel` set accordingly, inside a dedicated pool
    /// when more than one thread is requested.
    pub fn install<R: Send>(self, job: impl FnOnce(bool) -> R + Send) -> Result<R, PipelineError> {
        let n = match self {
            Threads::Single => return Ok(job(false)),
            Threads::Count(n) => n,
            Threads::Auto => 0,
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| PipelineError::ThreadPool(e.to_string()))?;
        Ok(pool.install(|| job(true)))
    }
}

#[derive(Debug, Clone)]
pub struct Separation {
    /// `K` spatial images, each `M` channels of the input length.
    pub images: Vec<Vec<Vec<f64>>>,
    pub result: SeparationResult,
    /// Optimizer seconds per second of audio, when timed.
    pub rtf: Option<f64>,
}

/// Separates `k` targets from a planar multichannel signal.
pub fn separate_signal(
    mixture: &[Vec<f64>],
    sample_rate: u32,
    k: usize,
    stft_cfg: &StftConfig,
    run_cfg: &RunConfig,
    timed: bool,
) -> Result<Separation, PipelineError> {
    if timed {
        separate_with(mixture, sample_rate, k, stft_cfg, run_cfg, &mut WallClock::default())
    } else {
        separate_with(mixture, sample_rate, k, stft_cfg, run_cfg, &mut NoHooks)
    }
}

pub fn separate_with(
    mixture: &[Vec<f64>],
    sample_rate: u32,
    k: usize,
    stft_cfg: &StftConfig,
    run_cfg: &RunConfig,
    hooks: &mut dyn RunHooks,
) -> Result<Separation, PipelineError> {
    let len = mixture.first().map_or(0, Vec::len);
    let x = stft(mixture, stft_cfg)?;
    let result = run_with(&x, k, run_cfg, hooks)?;
    let images = result
        .images
        .iter()
        .map(|img| istft(img, stft_cfg, len))
        .collect::<Result<Vec<_>, _>>()?;
    let duration = len as f64 / sample_rate as f64;
    let rtf = result.wall_time.map(|t| crate::simulate::rtf(t, duration));
    Ok(Separation { images, result, rtf })
}
