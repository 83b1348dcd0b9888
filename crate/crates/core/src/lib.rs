//! Popularity models and editorial decision support for short-form video.
//!
//! This crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs: file formats, the CLI, and the HTTP service live
//! in the `clipwise` companion crate.
//!
//! Module map:
//!
//! * [`nnkern`]: dense/LSTM/attention/conv kernels with analytic backward
//!   passes, SGD training and finite-difference gradient checking.
//! * [`datapipe`]: view normalization, median labeling, splits, category
//!   de-biasing and embedding tables.
//! * [`headline`]: bi-LSTM + attention headline scorer.
//! * [`visual`]: thumbnail recommendation, opening-scene model, tiny CNN
//!   backbone and GradCAM.
//! * [`archive`]: tag index, topic classifier and tag statistics.
//! * [`chat`]: rule-based intent parsing and responses.
//! * [`deploy`]: percentile alerting and A/B lift analysis.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod archive;
pub mod chat;
pub mod datapipe;
pub mod deploy;
mod error;
pub mod headline;
pub(crate) mod math;
pub mod nnkern;
pub mod stats;
pub mod visual;

pub use error::{Error, Result};
