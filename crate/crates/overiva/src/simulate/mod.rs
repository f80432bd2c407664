//! Synthetic convolutive mixtures and separation metrics.

mod metrics;
mod rir;
mod rng;
mod scene;
mod source;

pub use metrics::{rtf, sdr, sdr_set, MetricError, SdrSet, MAX_PERMUTED, SDR_CAP_DB};
pub use rir::{rir_len, synth_rir, synth_rir_with, TAIL_GAIN};
pub use rng::{SceneRng, PRNG_NAME};
pub use scene::{measured_sinr_db, read_scene, synthesize, write_scene, Scene, SceneError, SceneSpec, PEAK};
pub use source::{builtin_source, normalize_power, power, white_noise};
