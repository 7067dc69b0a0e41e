use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain of the operation.
    #[error("{name} = {value}: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("total harmonic content is undefined for a zero DC component")]
    UndefinedThc,

    #[error("sample rate {sample_rate} Hz is below {required} Hz (20x the fundamental {fundamental} Hz); harmonics would alias")]
    Aliasing {
        sample_rate: f64,
        required: f64,
        fundamental: f64,
    },

    #[error("signal has {0} samples, at least 2 are required")]
    SignalTooShort(usize),

    #[error("spectra do not share a frequency grid: {0}")]
    GridMismatch(String),

    #[error("band [{lo}, {hi}] Hz lies outside the spectrum grid [0, {nyquist}] Hz")]
    BandOutsideGrid { lo: f64, hi: f64, nyquist: f64 },

    #[error("platoon size {q} exceeds fleet size {n}")]
    PlatoonTooLarge { q: usize, n: usize },

    #[error("platoon size {q} does not divide fleet size {n}")]
    PlatoonIndivisible { q: usize, n: usize },

    #[error("scenario {0} has no wide-sense-stationary autocorrelation")]
    NotStationary(&'static str),

    #[error("vehicles {follower} and {leader} collided at t = {time:.3} s (gap {gap:.4} m)")]
    Collision {
        follower: u64,
        leader: u64,
        time: f64,
        gap: f64,
    },

    #[error("{path}: {msg}")]
    Config { path: String, msg: String },

    #[error("{path}:{line}: {msg}")]
    Csv {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            reason,
        }
    }

    pub(crate) fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Rejects non-finite or non-positive values.
pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::domain(name, value, "must be finite and > 0"))
    }
}

pub(crate) fn ensure_non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::domain(name, value, "must be finite and >= 0"))
    }
}
