use super::SceneRng;

/// Speech-like test signal of unit variance: first-order low-passed
/// Gaussian noise under a squared-sine envelope near 4 Hz.
///
/// Draw order: modulation rate, phase, filter pole, then one normal per
/// sample.
pub fn builtin_source(len: usize, sample_rate: u32, rng: &mut SceneRng) -> Vec<f64> {
    let rate = 4.0 * (0.75 + 0.5 * rng.uniform());
    let phase = std::f64::consts::TAU * rng.uniform();
    let pole = 0.5 + 0.45 * rng.uniform();
    let step = std::f64::consts::TAU * rate / sample_rate as f64;
    let mut y = 0.0;
    let mut out: Vec<f64> = (0..len)
        .map(|i| {
            y = pole * y + (1.0 - pole) * rng.normal();
            let s = 0.5 * (1.0 + (step * i as f64 + phase).sin());
            (0.01 + s * s) * y
        })
        .collect();
    normalize_power(&mut out);
    out
}

pub fn white_noise(len: usize, rng: &mut SceneRng) -> Vec<f64> {
    (0..len).map(|_| rng.normal()).collect()
}

/// Mean square over all samples of all channels.
pub fn power(channels: &[Vec<f64>]) -> f64 {
    let n: usize = channels.iter().map(Vec::len).sum();
    if n == 0 {
        return 0.0;
    }
    channels.iter().flatten().map(|v| v * v).sum::<f64>() / n as f64
}

/// Scales to unit mean square; returns `false` for a silent signal.
pub fn normalize_power(x: &mut [f64]) -> bool {
    let p = x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64;
    if p <= 0.0 {
        return false;
    }
    let g = p.sqrt().recip();
    x.iter_mut().for_each(|v| *v *= g);
    true
}
