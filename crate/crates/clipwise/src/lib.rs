//! File formats, model bundles, the HTTP service and synthetic data for
//! `clipwise-core`.

pub mod bundle;
pub mod config;
pub mod data;
pub mod demo;
pub mod error;
pub mod formats;
pub mod pipeline;
pub mod scorelog;
pub mod service;
pub mod synth;

pub use error::{AppError, Result};
