//! Fixed-length utterance representations for emotion-profile time series.
//!
//! The core summarizer fits a higher-order (delay-embedded) Koopman operator
//! to each utterance by least squares and keeps its dominant dynamic mode.
//! Averages, power means, functionals and truncated DCT are provided as
//! competing summarizers, and [`eval`] runs cross-validated random-forest
//! experiments over grids of them.

pub mod cli;
pub mod dmd;
pub mod ep;
pub mod error;
pub mod eval;
pub mod io;
pub mod numerics;
pub mod summarize;
pub mod synth;

pub use error::{Error, Result};
