//! Front end for overdetermined IVA: STFT, WAV I/O, synthetic scenes,
//! metrics, the benchmark matrix and the `overiva` command line.
//!
//! The numerical core is re-exported as [`overiva_core`].

pub mod bench;
pub mod cli;
pub mod io;
pub mod pipeline;
pub mod report;
pub mod simulate;
pub mod stft;

pub use overiva_core;
