pub mod analytic;
pub mod cli;
pub mod config;
pub mod er_model;
pub mod error;
pub mod harmonics;
pub mod manifest;
pub mod microsim;
pub mod rng;
pub mod signal;
pub mod spectral;
pub mod traffic;

pub use error::{Error, Result};
