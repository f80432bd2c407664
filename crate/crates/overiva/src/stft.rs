//! Multichannel short-time Fourier transform with overlap-add synthesis.
//!
//! Frames are taken from the signal after zero-padding `frame_len − hop`
//! samples at the front and at least as many at the back, so every input
//! sample is covered by a full set of overlapping windows. The forward
//! transform is unnormalized; [`istft`] undoes it exactly.

use std::f64::consts::PI;
use std::sync::Arc;

use overiva_core::{Spectrogram, C64};
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StftError {
    #[error("signal has {len} samples, need at least one frame of {frame_len}")]
    SignalTooShort { len: usize, frame_len: usize },
    #[error("spectrogram shape does not match the transform: {0}")]
    ShapeMismatch(String),
    #[error("invalid STFT configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    #[default]
    SqrtHann,
}

impl Window {
    /// Periodic window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::SqrtHann => (0..n).map(|i| (PI * i as f64 / n as f64).sin()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct StftConfig {
    pub frame_len: usize,
    pub hop: usize,
    pub window: Window,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self::new(4096, 4)
    }
}

impl StftConfig {
    /// `hop = frame_len / hop_div`.
    pub fn new(frame_len: usize, hop_div: usize) -> Self {
        Self {
            frame_len,
            hop: frame_len / hop_div.max(1),
            window: Window::SqrtHann,
        }
    }

    pub fn validate(&self) -> Result<(), StftError> {
        let n = self.frame_len;
        if n < 2 || !n.is_power_of_two() {
            return Err(StftError::InvalidConfig(format!(
                "frame length {n} is not a power of two >= 2"
            )));
        }
        if self.hop == 0 || !n.is_multiple_of(self.hop) || n / self.hop < 2 {
            return Err(StftError::InvalidConfig(format!(
                "hop {} must divide frame length {n} at least twice",
                self.hop
            )));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.frame_len / 2 + 1
    }

    fn pad(&self) -> usize {
        self.frame_len - self.hop
    }

    /// Frame count for a signal of `len` samples.
    pub fn frames(&self, len: usize) -> usize {
        let padded = len + 2 * self.pad();
        (padded - self.frame_len).div_ceil(self.hop) + 1
    }
}

fn planner_pair(n: usize) -> (Arc<dyn RealToComplex<f64>>, Arc<dyn ComplexToReal<f64>>) {
    let mut planner = RealFftPlanner::<f64>::new();
    (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
}

/// Analysis of `signal` (one slice per channel, equal lengths).
pub fn stft(signal: &[Vec<f64>], cfg: &StftConfig) -> Result<Spectrogram, StftError> {
    cfg.validate()?;
    let channels = signal.len();
    if channels == 0 {
        return Err(StftError::ShapeMismatch("no channels".into()));
    }
    let len = signal[0].len();
    if signal.iter().any(|c| c.len() != len) {
        return Err(StftError::ShapeMismatch("channels differ in length".into()));
    }
    if len < cfg.frame_len {
        return Err(StftError::SignalTooShort {
            len,
            frame_len: cfg.frame_len,
        });
    }
    let n = cfg.frame_len;
    let frames = cfg.frames(len);
    let pad = cfg.pad();
    let window = cfg.window.coefficients(n);
    let (fwd, _) = planner_pair(n);
    let mut input = fwd.make_input_vec();
    let mut output = fwd.make_output_vec();
    let mut scratch = fwd.make_scratch_vec();

    let mut spec = Spectrogram::zeros(cfg.bins(), frames, channels);
    for (m, chan) in signal.iter().enumerate() {
        for t in 0..frames {
            let start = t * cfg.hop;
            for (i, v) in input.iter_mut().enumerate() {
                let pos = (start + i).checked_sub(pad);
                *v = pos.and_then(|p| chan.get(p)).map_or(0.0, |&s| s * window[i]);
            }
            fwd.process_with_scratch(&mut input, &mut output, &mut scratch)
                .expect("buffer sizes come from the plan");
            for (f, v) in output.iter().enumerate() {
                spec.set(f, t, m, *v);
            }
        }
    }
    Ok(spec)
}

/// Overlap-add synthesis returning `len` samples per channel. The bins at
/// DC and Nyquist are taken as real.
pub fn istft(spec: &Spectrogram, cfg: &StftConfig, len: usize) -> Result<Vec<Vec<f64>>, StftError> {
    cfg.validate()?;
    if spec.bins() != cfg.bins() {
        return Err(StftError::ShapeMismatch(format!(
            "{} bins for frame length {}",
            spec.bins(),
            cfg.frame_len
        )));
    }
    if spec.frames() != cfg.frames(len) {
        return Err(StftError::ShapeMismatch(format!(
            "{} frames cannot synthesize {len} samples",
            spec.frames()
        )));
    }
    let n = cfg.frame_len;
    let pad = cfg.pad();
    let window = cfg.window.coefficients(n);
    // Overlapped squared window, periodic in the hop.
    let mut norm = vec![0.0; cfg.hop];
    for (i, w) in window.iter().enumerate() {
        norm[i % cfg.hop] += w * w;
    }
    let (_, inv) = planner_pair(n);
    let mut input = inv.make_input_vec();
    let mut output = inv.make_output_vec();
    let mut scratch = inv.make_scratch_vec();
    let last = input.len() - 1;

    let mut out = vec![vec![0.0; len]; spec.channels()];
    for (m, chan) in out.iter_mut().enumerate() {
        for t in 0..spec.frames() {
            for (f, v) in input.iter_mut().enumerate() {
                *v = spec.get(f, t, m);
            }
            input[0].im = 0.0;
            input[last].im = 0.0;
            inv.process_with_scratch(&mut input, &mut output, &mut scratch)
                .expect("buffer sizes come from the plan");
            let start = t * cfg.hop;
            for (i, v) in output.iter().enumerate() {
                if let Some(p) = (start + i).checked_sub(pad).filter(|&p| p < len) {
                    chan[p] += v * window[i];
                }
            }
        }
        let scale = 1.0 / n as f64;
        for (p, v) in chan.iter_mut().enumerate() {
            *v *= scale / norm[(p + pad) % cfg.hop];
        }
    }
    Ok(out)
}

/// Energy of one frame's time-domain samples recovered from its half
/// spectrum: `(|X_0|² + 2 Σ |X_k|² + |X_{N/2}|²) / N`.
pub fn half_spectrum_energy(spectrum: &[C64], frame_len: usize) -> f64 {
    let last = spectrum.len() - 1;
    let inner: f64 = spectrum[1..last].iter().map(|v| v.norm_sqr()).sum();
    (spectrum[0].norm_sqr() + 2.0 * inner + spectrum[last].norm_sqr()) / frame_len as f64
}
