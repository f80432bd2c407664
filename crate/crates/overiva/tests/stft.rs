use overiva::simulate::SceneRng;
use overiva::stft::{half_spectrum_energy, istft, stft, StftConfig, Window};
use overiva_core::{Spectrogram, C64};

fn noise(rng: &mut SceneRng, channels: usize, len: usize) -> Vec<Vec<f64>> {
    (0..channels)
        .map(|_| (0..len).map(|_| rng.normal()).collect())
        .collect()
}

fn rms_rel(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let num: f64 = a
        .iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).powi(2))
        .sum();
    let den: f64 = b.iter().flatten().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// Direct O(N²) DFT of one windowed frame.
fn dft(frame: &[f64]) -> Vec<C64> {
    let n = frame.len();
    (0..n / 2 + 1)
        .map(|k| {
            frame
                .iter()
                .enumerate()
                .map(|(i, &v)| C64::from_polar(v, -std::f64::consts::TAU * (k * i) as f64 / n as f64))
                .sum()
        })
        .collect()
}

#[test]
fn zero_signal_gives_zero_spectrogram() {
    let cfg = StftConfig::new(64, 4);
    let s = stft(&[vec![0.0; 300], vec![0.0; 300]], &cfg).unwrap();
    assert!(s.as_slice().iter().all(|v| *v == C64::new(0.0, 0.0)));
    let back = istft(&Spectrogram::zeros(33, cfg.frames(300), 2), &cfg, 300).unwrap();
    assert!(back.iter().flatten().all(|&v| v == 0.0));
}

#[test]
fn frames_match_direct_dft() {
    let cfg = StftConfig::new(64, 4);
    let mut rng = SceneRng::new(1);
    let x = noise(&mut rng, 1, 500);
    let s = stft(&x, &cfg).unwrap();
    let w = Window::SqrtHann.coefficients(64);
    let pad = 64 - 16;
    for t in [0, 5, s.frames() - 1] {
        let frame: Vec<f64> = (0..64)
            .map(|i| {
                let p = (t * 16 + i) as isize - pad as isize;
                if p >= 0 && (p as usize) < 500 {
                    x[0][p as usize] * w[i]
                } else {
                    0.0
                }
            })
            .collect();
        for (f, v) in dft(&frame).iter().enumerate() {
            assert!((s.get(f, t, 0) - v).norm() < 1e-10);
        }
    }
}

#[test]
fn impulse_at_frame_center_has_flat_magnitude() {
    let cfg = StftConfig::new(64, 4);
    let mut x = vec![0.0; 512];
    // Frame 10 starts at padded sample 160, i.e. signal sample 112; its
    // center is 32 samples later.
    x[112 + 32] = 1.0;
    let s = stft(&[x], &cfg).unwrap();
    let w_center = Window::SqrtHann.coefficients(64)[32];
    for f in 0..33 {
        assert!((s.get(f, 10, 0).norm() - w_center).abs() < 1e-12);
    }
}

#[test]
fn sinusoid_energy_lands_in_its_bin() {
    let cfg = StftConfig::new(256, 4);
    let bin = 20;
    let x: Vec<f64> = (0..4096)
        .map(|i| (std::f64::consts::TAU * bin as f64 * i as f64 / 256.0).cos())
        .collect();
    let s = stft(&[x], &cfg).unwrap();
    for t in 4..s.frames() - 4 {
        let peak = (0..129)
            .max_by(|&a, &b| s.get(a, t, 0).norm().total_cmp(&s.get(b, t, 0).norm()))
            .unwrap();
        assert_eq!(peak, bin);
        let total: f64 = (0..129).map(|f| s.get(f, t, 0).norm_sqr()).sum();
        let near: f64 = (bin - 2..=bin + 2).map(|f| s.get(f, t, 0).norm_sqr()).sum();
        assert!(near / total > 0.99, "{}", near / total);
    }
}

#[test]
fn round_trip_ten_seconds() {
    let cfg = StftConfig::new(4096, 4);
    let mut rng = SceneRng::new(2);
    let x = noise(&mut rng, 2, 160_000);
    let s = stft(&x, &cfg).unwrap();
    let y = istft(&s, &cfg, 160_000).unwrap();
    assert!(rms_rel(&y, &x) <= 1e-6);
}

#[test]
fn round_trip_odd_lengths() {
    let cfg = StftConfig::new(64, 4);
    let mut rng = SceneRng::new(3);
    for len in [64, 65, 79, 100, 333] {
        let x = noise(&mut rng, 1, len);
        let y = istft(&stft(&x, &cfg).unwrap(), &cfg, len).unwrap();
        assert!(rms_rel(&y, &x) <= 1e-12, "len {len}");
    }
}

#[test]
fn parseval_per_frame() {
    let cfg = StftConfig::new(512, 4);
    let mut rng = SceneRng::new(4);
    let x = noise(&mut rng, 1, 5000);
    let s = stft(&x, &cfg).unwrap();
    let w = Window::SqrtHann.coefficients(512);
    let pad = 512 - 128;
    for t in 0..s.frames() {
        let time: f64 = (0..512)
            .map(|i| {
                let p = (t * 128 + i).checked_sub(pad).filter(|&p| p < 5000);
                p.map_or(0.0, |p| (x[0][p] * w[i]).powi(2))
            })
            .sum();
        let spec: Vec<C64> = (0..257).map(|f| s.get(f, t, 0)).collect();
        let freq = half_spectrum_energy(&spec, 512);
        assert!((time - freq).abs() <= 1e-9 * time.max(1e-300));
    }
}

#[test]
fn synthesis_is_linear() {
    let cfg = StftConfig::new(64, 4);
    let mut rng = SceneRng::new(5);
    let frames = cfg.frames(200);
    let mut rand_spec = || Spectrogram::from_fn(33, frames, 1, |_, _, _| C64::new(rng.normal(), rng.normal()));
    let (s1, s2) = (rand_spec(), rand_spec());
    let (a, b) = (C64::new(0.7, 0.0), C64::new(-1.3, 0.0));
    let mut combo = s1.clone();
    for (c, v) in combo.as_mut_slice().iter_mut().zip(s2.as_slice()) {
        *c = *c * a + v * b;
    }
    let y1 = istft(&s1, &cfg, 200).unwrap();
    let y2 = istft(&s2, &cfg, 200).unwrap();
    let y = istft(&combo, &cfg, 200).unwrap();
    for i in 0..200 {
        assert!((y[0][i] - (a.re * y1[0][i] + b.re * y2[0][i])).abs() < 1e-9);
    }
}

#[test]
fn shape_errors() {
    let cfg = StftConfig::new(64, 4);
    assert!(istft(&Spectrogram::zeros(10, 5, 1), &cfg, 100).is_err());
    assert!(istft(&Spectrogram::zeros(33, 5, 1), &cfg, 100).is_err());
    assert!(stft(&[vec![0.0; 100], vec![0.0; 99]], &cfg).is_err());
}
