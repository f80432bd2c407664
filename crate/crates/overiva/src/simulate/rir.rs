use super::SceneRng;

/// Taps for a reverberation time, never fewer than 64.
pub fn rir_len(rt60_ms: f64, sample_rate: u32) -> usize {
    ((3.0 * rt60_ms * sample_rate as f64 / 1000.0).round() as usize).max(64)
}

/// Amplitude of the reverberant tail relative to the direct path.
pub const TAIL_GAIN: f64 = 0.05;

/// Synthetic `channels`-channel room response, drawn from `rng`.
///
/// Per channel: a unit direct-path tap at a delay drawn uniformly below
/// 10 ms, followed by Gaussian taps with amplitude envelope
/// `TAIL_GAIN · 10^{−3n/n₆₀}`, `n₆₀ = rt60 · fs`, which falls by 60 dB
/// over one reverberation time.
pub fn synth_rir_with(rt60_ms: f64, sample_rate: u32, channels: usize, rng: &mut SceneRng) -> Vec<Vec<f64>> {
    let len = rir_len(rt60_ms, sample_rate);
    let n60 = (rt60_ms * sample_rate as f64 / 1000.0).max(1.0);
    let max_delay = (0.01 * sample_rate as f64).min((len - 1) as f64);
    (0..channels)
        .map(|_| {
            let delay = (rng.uniform() * max_delay) as usize;
            let mut h = vec![0.0; len];
            h[delay] = 1.0;
            for (n, tap) in h.iter_mut().enumerate().skip(delay + 1) {
                *tap = TAIL_GAIN * rng.normal() * 10f64.powf(-3.0 * n as f64 / n60);
            }
            h
        })
        .collect()
}

pub fn synth_rir(rt60_ms: f64, sample_rate: u32, channels: usize, seed: u64) -> Vec<Vec<f64>> {
    synth_rir_with(rt60_ms, sample_rate, channels, &mut SceneRng::new(seed))
}
