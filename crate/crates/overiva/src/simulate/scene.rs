use std::path::Path;

use realfft::RealFftPlanner;
use serde::{Deserialize, Serialize};

use super::source::{builtin_source, normalize_power, power, white_noise};
use super::{synth_rir_with, SceneRng, PRNG_NAME};
use crate::io::{read_wav, write_wav, AudioBuffer, IoError, SampleFormat};

/// Peak level of the rendered mixture.
pub const PEAK: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub sinr_db: f64,
    pub rt60_ms: f64,
    pub sample_rate: u32,
    pub duration_s: f64,
    pub seed: u64,
}

impl SceneSpec {
    pub fn samples(&self) -> usize {
        (self.duration_s * self.sample_rate as f64).round() as usize
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |msg: String| Err(SceneError::InvalidSpec(msg));
        if self.k == 0 {
            return bad("need at least one speaker".into());
        }
        if self.m < self.k + 1 {
            return bad(format!(
                "need more microphones than speakers (K={}, M={})",
                self.k, self.m
            ));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) || self.samples() == 0 {
            return bad(format!("duration {} s", self.duration_s));
        }
        if self.sample_rate == 0 {
            return bad("sample rate 0".into());
        }
        if !(self.rt60_ms > 0.0 && self.rt60_ms.is_finite()) {
            return bad(format!("rt60 {} ms", self.rt60_ms));
        }
        if !self.sinr_db.is_finite() {
            return bad("SINR must be finite".into());
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    #[error("invalid scene: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// A rendered mixture with its ground truth. Channels are planar.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub spec: SceneSpec,
    pub mixture: Vec<Vec<f64>>,
    /// `K` images `a_k * s_k`, each `M` channels.
    pub target_images: Vec<Vec<Vec<f64>>>,
    /// `L` noise images; absent when the scene was loaded from disk.
    pub noise_images: Option<Vec<Vec<Vec<f64>>>>,
}

impl Scene {
    pub fn duration(&self) -> f64 {
        self.mixture
            .first()
            .map_or(0.0, |c| c.len() as f64 / self.spec.sample_rate as f64)
    }
}

/// Linear convolution truncated to the input length, via one real FFT.
struct Convolver {
    len: usize,
    size: usize,
    spectrum: Vec<realfft::num_complex::Complex<f64>>,
    planner: RealFftPlanner<f64>,
}

impl Convolver {
    fn new(signal: &[f64], max_taps: usize) -> Self {
        let size = (signal.len() + max_taps - 1).next_power_of_two();
        let mut planner = RealFftPlanner::new();
        let fwd = planner.plan_fft_forward(size);
        let mut buf = vec![0.0; size];
        buf[..signal.len()].copy_from_slice(signal);
        let mut spectrum = fwd.make_output_vec();
        fwd.process(&mut buf, &mut spectrum).expect("sizes come from the plan");
        Self {
            len: signal.len(),
            size,
            spectrum,
            planner,
        }
    }

    fn apply(&mut self, fir: &[f64]) -> Vec<f64> {
        let fwd = self.planner.plan_fft_forward(self.size);
        let inv = self.planner.plan_fft_inverse(self.size);
        let mut buf = vec![0.0; self.size];
        buf[..fir.len()].copy_from_slice(fir);
        let mut h = fwd.make_output_vec();
        fwd.process(&mut buf, &mut h).expect("sizes come from the plan");
        for (a, b) in h.iter_mut().zip(&self.spectrum) {
            *a *= b;
        }
        h[0].im = 0.0;
        let last = h.len() - 1;
        h[last].im = 0.0;
        inv.process(&mut h, &mut buf).expect("sizes come from the plan");
        let scale = 1.0 / self.size as f64;
        buf.truncate(self.len);
        buf.iter_mut().for_each(|v| *v *= scale);
        buf
    }
}

fn render_image(signal: &[f64], rir: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let taps = rir.iter().map(Vec::len).max().unwrap_or(1);
    let mut conv = Convolver::new(signal, taps);
    rir.iter().map(|h| conv.apply(h)).collect()
}

fn scale_image(image: &mut [Vec<f64>], g: f64) {
    image.iter_mut().flatten().for_each(|v| *v *= g);
}

/// Renders a scene. `sources` replaces the built-in generator for the
/// speakers; each is cut or zero-padded to the scene length.
///
/// Draw order from the seed: speaker signals (built-in only), noise
/// signals, then one room response per speaker followed by one per noise.
/// Every image is normalized to unit power, noise images are then scaled
/// together to the requested SINR, and all images share one gain that puts
/// the mixture peak at [`PEAK`].
pub fn synthesize(spec: &SceneSpec, sources: Option<&[Vec<f64>]>) -> Result<Scene, SceneError> {
    spec.validate()?;
    let n = spec.samples();
    let fs = spec.sample_rate;
    let mut rng = SceneRng::new(spec.seed);

    let speakers: Vec<Vec<f64>> = match sources {
        Some(src) => {
            if src.len() != spec.k {
                return Err(SceneError::InvalidSpec(format!(
                    "{} speech inputs for K={}",
                    src.len(),
                    spec.k
                )));
            }
            src.iter()
                .map(|s| {
                    let mut v = s.clone();
                    v.resize(n, 0.0);
                    if normalize_power(&mut v) {
                        Ok(v)
                    } else {
                        Err(SceneError::InvalidSpec("silent speech input".into()))
                    }
                })
                .collect::<Result<_, _>>()?
        }
        None => (0..spec.k).map(|_| builtin_source(n, fs, &mut rng)).collect(),
    };
    let noises: Vec<Vec<f64>> = (0..spec.l).map(|_| white_noise(n, &mut rng)).collect();

    let mut render = |signal: &[f64]| {
        let rir = synth_rir_with(spec.rt60_ms, fs, spec.m, &mut rng);
        let mut image = render_image(signal, &rir);
        let p = power(&image);
        if p > 0.0 {
            scale_image(&mut image, p.sqrt().recip());
        }
        image
    };
    let mut targets: Vec<Vec<Vec<f64>>> = speakers.iter().map(|s| render(s)).collect();
    let mut noise_imgs: Vec<Vec<Vec<f64>>> = noises.iter().map(|s| render(s)).collect();

    if spec.l > 0 {
        let per_noise = 10f64.powf(-spec.sinr_db / 10.0) / spec.l as f64;
        noise_imgs.iter_mut().for_each(|img| scale_image(img, per_noise.sqrt()));
    }

    let sum = |targets: &[Vec<Vec<f64>>], noises: &[Vec<Vec<f64>>]| {
        let mut mix = vec![vec![0.0; n]; spec.m];
        for img in targets.iter().chain(noises) {
            for (mc, ic) in mix.iter_mut().zip(img) {
                mc.iter_mut().zip(ic).for_each(|(a, b)| *a += b);
            }
        }
        mix
    };
    let peak = sum(&targets, &noise_imgs)
        .iter()
        .flatten()
        .fold(0.0f64, |a, v| a.max(v.abs()));
    if peak > 0.0 {
        let g = PEAK / peak;
        targets
            .iter_mut()
            .chain(noise_imgs.iter_mut())
            .for_each(|img| scale_image(img, g));
    }
    let mixture = sum(&targets, &noise_imgs);

    Ok(Scene {
        spec: spec.clone(),
        mixture,
        target_images: targets,
        noise_images: Some(noise_imgs),
    })
}

/// `10 log10((1/K) Σ σ_k² / Σ σ_l²)` from the rendered images; `+∞`
/// without noise. `None` for a scene loaded without noise images.
pub fn measured_sinr_db(scene: &Scene) -> Option<f64> {
    let noises = scene.noise_images.as_ref()?;
    let target: f64 = scene.target_images.iter().map(|i| power(i)).sum::<f64>() / scene.target_images.len() as f64;
    let noise: f64 = noises.iter().map(|i| power(i)).sum();
    Some(if noise == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (target / noise).log10()
    })
}

#[derive(Serialize, Deserialize)]
struct SpecFile {
    #[serde(flatten)]
    spec: SceneSpec,
    prng: String,
}

/// Writes `mixture.wav`, `target_<k>.wav` (from 1) and `spec.json`.
pub fn write_scene(dir: impl AsRef<Path>, scene: &Scene) -> Result<(), SceneError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|source| SceneError::File {
        path: dir.display().to_string(),
        source,
    })?;
    let fs = scene.spec.sample_rate;
    write_wav(
        dir.join("mixture.wav"),
        &AudioBuffer::new(fs, scene.mixture.clone())?,
        SampleFormat::Float32,
    )?;
    for (k, img) in scene.target_images.iter().enumerate() {
        let path = dir.join(format!("target_{}.wav", k + 1));
        write_wav(path, &AudioBuffer::new(fs, img.clone())?, SampleFormat::Float32)?;
    }
    let path = dir.join("spec.json");
    let meta = SpecFile {
        spec: scene.spec.clone(),
        prng: PRNG_NAME.into(),
    };
    let text = serde_json::to_string_pretty(&meta).expect("spec serializes");
    std::fs::write(&path, text + "\n").map_err(|source| SceneError::File {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_scene(dir: impl AsRef<Path>) -> Result<Scene, SceneError> {
    let dir = dir.as_ref();
    let path = dir.join("spec.json");
    let text = std::fs::read_to_string(&path).map_err(|source| SceneError::File {
        path: path.display().to_string(),
        source,
    })?;
    let meta: SpecFile = serde_json::from_str(&text).map_err(|source| SceneError::Json {
        path: path.display().to_string(),
        source,
    })?;
    let mixture = read_wav(dir.join("mixture.wav"))?.channels;
    let target_images = (1..=meta.spec.k)
        .map(|k| read_wav(dir.join(format!("target_{k}.wav"))).map(|b| b.channels))
        .collect::<Result<_, _>>()?;
    Ok(Scene {
        spec: meta.spec,
        mixture,
        target_images,
        noise_images: None,
    })
}
