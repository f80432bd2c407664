//! Overdetermined independent vector analysis.
//!
//! Extracts `K` nonstationary sources from an `M`-channel STFT-domain
//! mixture (`K < M`) by block coordinate descent on the demixing matrices,
//! treating the remaining `M − K` dimensions as stationary Gaussian noise.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerics:
//! the dense complex kernel in [`linalg`], the probabilistic model in
//! [`model`] and the update rules plus main loop in [`optimizer`]. Signal
//! I/O, the STFT and the benchmark harness live in the `overiva` crate.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
pub mod linalg;
pub mod model;
pub mod optimizer;
mod spectrogram;

pub use error::Error;
pub use linalg::{CMatrix, LinalgError, C64};
pub use model::{CovarianceSet, DemixingStack, Ridge, VarianceMap};
pub use optimizer::{run, run_with, Method, NoHooks, RunConfig, RunHooks, SeparationResult, WzUpdate};
pub use spectrogram::Spectrogram;

pub type Result<T, E = Error> = core::result::Result<T, E>;
