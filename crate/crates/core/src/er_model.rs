//! Roadway geometry and the load drawn by a single EV.
//!
//! Positions are measured from the back end of the first transmitter coil
//! to the front end of the EV's receiver. Coils repeat every
//! `seg_len = tx_len + gap` meters.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};

/// INDOT testbed transmitter length: 12 ft.
pub const INDOT_TX_LEN: f64 = 3.6576;
/// INDOT testbed coil gap: 3 ft.
pub const INDOT_GAP: f64 = 0.9144;
/// INDOT prototype receiver length.
pub const INDOT_RX_LEN: f64 = 1.8;
/// INDOT rated power density, 200 kW over a 1.8 m receiver.
pub const INDOT_RATED_DENSITY: f64 = 111.11;
/// Length of the INDOT pilot stretch.
pub const INDOT_TESTBED_LEN: f64 = 400.0;

/// Geometry and rating of an electrified roadway segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErConfig {
    tx_len: f64,
    gap: f64,
    total_len: f64,
    rated_density: f64,
}

impl ErConfig {
    pub fn new(tx_len: f64, gap: f64, total_len: f64, rated_density: f64) -> Result<Self> {
        ensure_positive("tx_len", tx_len)?;
        ensure_non_negative("gap", gap)?;
        ensure_positive("rated_density", rated_density)?;
        ensure_positive("total_len", total_len)?;
        let cfg = Self {
            tx_len,
            gap,
            total_len,
            rated_density,
        };
        if cfg.n_segments() < 1 {
            return Err(Error::domain(
                "total_len",
                total_len,
                "must hold at least one coil segment",
            ));
        }
        Ok(cfg)
    }

    /// INDOT coil geometry over a roadway of `total_len` meters.
    pub fn indot(total_len: f64) -> Result<Self> {
        Self::new(INDOT_TX_LEN, INDOT_GAP, total_len, INDOT_RATED_DENSITY)
    }

    pub fn tx_len(&self) -> f64 {
        self.tx_len
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// Spatial period of the coil pattern.
    pub fn seg_len(&self) -> f64 {
        self.tx_len + self.gap
    }

    pub fn total_len(&self) -> f64 {
        self.total_len
    }

    pub fn rated_density(&self) -> f64 {
        self.rated_density
    }

    pub fn n_segments(&self) -> usize {
        // Tolerate round-off when total_len is an exact multiple of seg_len.
        (self.total_len / self.seg_len() + 1e-9).floor() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ControlMode {
    /// Draw `density` kW per meter of overlap.
    Multiplicative,
    /// Draw the rated density per meter of overlap, saturating total power at
    /// `peak_density * rx_len`.
    Clipped { peak_density: f64 },
}

/// Parameters of one EV on the roadway.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvParams {
    pub rx_len: f64,
    /// kW per meter of Rx/Tx overlap. Unused in clipped mode.
    pub density: f64,
    /// Phase of the EV against the coil pattern, in `[0, seg_len / speed)`.
    pub timing: f64,
    pub speed: f64,
    pub control: ControlMode,
    /// Absolute time the receiver reaches the first coil; only consulted when
    /// the EV is placed on a finite roadway.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry_time: Option<f64>,
}

impl EvParams {
    pub fn new(
        er: &ErConfig,
        rx_len: f64,
        density: f64,
        timing: f64,
        speed: f64,
        control: ControlMode,
    ) -> Result<Self> {
        let ev = Self {
            rx_len,
            density,
            timing,
            speed,
            control,
            entry_time: None,
        };
        ev.validate(er)?;
        Ok(ev)
    }

    pub fn multiplicative(
        er: &ErConfig,
        rx_len: f64,
        density: f64,
        timing: f64,
        speed: f64,
    ) -> Result<Self> {
        Self::new(er, rx_len, density, timing, speed, ControlMode::Multiplicative)
    }

    pub fn with_entry_time(mut self, entry_time: f64) -> Self {
        self.entry_time = Some(entry_time);
        self
    }

    /// Fundamental period of this EV's load, `seg_len / speed`.
    pub fn period(&self, er: &ErConfig) -> f64 {
        er.seg_len() / self.speed
    }

    pub fn validate(&self, er: &ErConfig) -> Result<()> {
        ensure_positive("rx_len", self.rx_len)?;
        ensure_positive("density", self.density)?;
        ensure_positive("speed", self.speed)?;
        if self.density > er.rated_density() * (1.0 + 1e-12) {
            return Err(Error::domain(
                "density",
                self.density,
                "exceeds the rated density of the roadway",
            ));
        }
        if let ControlMode::Clipped { peak_density } = self.control {
            ensure_positive("peak_density", peak_density)?;
            if peak_density > er.rated_density() * (1.0 + 1e-12) {
                return Err(Error::domain(
                    "peak_density",
                    peak_density,
                    "exceeds the rated density of the roadway",
                ));
            }
        }
        let period = self.period(er);
        if !(self.timing >= 0.0 && self.timing < period) {
            return Err(Error::domain(
                "timing",
                self.timing,
                "must lie in [0, seg_len / speed)",
            ));
        }
        Ok(())
    }
}

/// Position of an EV over time.
#[derive(Debug, Clone, PartialEq)]
pub enum Trajectory {
    /// `x(t) = speed * (t - entry_time)` for `t >= entry_time`.
    ConstantSpeed { entry_time: f64, speed: f64 },
    /// Positions on a uniform grid starting at `t0`, linearly interpolated.
    Sampled {
        t0: f64,
        dt: f64,
        positions: Vec<f64>,
    },
}

impl Trajectory {
    /// Position at `t`, or `None` outside the trajectory's support.
    pub fn position_at(&self, t: f64) -> Option<f64> {
        match self {
            Trajectory::ConstantSpeed { entry_time, speed } => {
                (t >= *entry_time).then(|| speed * (t - entry_time))
            }
            Trajectory::Sampled { t0, dt, positions } => {
                let last = positions.len().checked_sub(1)?;
                let u = (t - t0) / dt;
                if u < 0.0 || u > last as f64 {
                    return None;
                }
                let i = (u.floor() as usize).min(last);
                if i == last {
                    return Some(positions[last]);
                }
                let frac = u - i as f64;
                Some(positions[i] + frac * (positions[i + 1] - positions[i]))
            }
        }
    }

    /// Time span `[start, end]` over which the position is defined.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Trajectory::ConstantSpeed { entry_time, .. } => (*entry_time, f64::INFINITY),
            Trajectory::Sampled { t0, dt, positions } => {
                (*t0, t0 + dt * positions.len().saturating_sub(1) as f64)
            }
        }
    }
}

/// Overlap in meters between a receiver whose front end is `x` meters past
/// the back end of a transmitter coil, and that coil.
pub fn overlap(x: f64, rx_len: f64, tx_len: f64) -> Result<f64> {
    ensure_positive("rx_len", rx_len)?;
    ensure_positive("tx_len", tx_len)?;
    Ok(overlap_unchecked(x, rx_len, tx_len))
}

#[inline]
pub(crate) fn overlap_unchecked(x: f64, rx_len: f64, tx_len: f64) -> f64 {
    x.min(rx_len).min(tx_len).min(rx_len + tx_len - x).max(0.0)
}

/// Total Rx/Tx overlap at position `x` on the finite K-coil roadway.
pub(crate) fn roadway_overlap(er: &ErConfig, rx_len: f64, x: f64) -> f64 {
    let seg = er.seg_len();
    let span = rx_len + er.tx_len();
    let k_max = er.n_segments() as f64 - 1.0;
    if x <= 0.0 || x >= k_max * seg + span {
        return 0.0;
    }
    // Coils k with x - k*seg in (0, span).
    let lo = ((x - span) / seg).floor().max(0.0);
    let hi = (x / seg).ceil().min(k_max);
    let mut total = 0.0;
    let mut k = lo;
    while k <= hi {
        total += overlap_unchecked(x - k * seg, rx_len, er.tx_len());
        k += 1.0;
    }
    total
}

/// Total overlap for the infinite coil train, `x` taken modulo the period.
#[inline]
pub(crate) fn periodic_overlap(seg_len: f64, tx_len: f64, rx_len: f64, x: f64) -> f64 {
    let span = rx_len + tx_len;
    let mut r = x.rem_euclid(seg_len);
    let mut total = 0.0;
    while r < span {
        total += overlap_unchecked(r, rx_len, tx_len);
        r += seg_len;
    }
    total
}

/// Applies the EV's power control to a total overlap in meters.
#[inline]
pub(crate) fn controlled_power(ev: &EvParams, er: &ErConfig, total_overlap: f64) -> f64 {
    match ev.control {
        ControlMode::Multiplicative => ev.density * total_overlap,
        ControlMode::Clipped { peak_density } => {
            (er.rated_density() * total_overlap).min(peak_density * ev.rx_len)
        }
    }
}

/// Power in kW drawn by `ev` with its receiver front at position `x`.
pub fn ev_load_at_position(ev: &EvParams, er: &ErConfig, x: f64) -> f64 {
    controlled_power(ev, er, roadway_overlap(er, ev.rx_len, x))
}

/// Power in kW drawn by `ev` following `traj` at time `t`; zero wherever the
/// trajectory is undefined.
pub fn ev_load_at_time(ev: &EvParams, traj: &Trajectory, er: &ErConfig, t: f64) -> f64 {
    traj.position_at(t)
        .map_or(0.0, |x| ev_load_at_position(ev, er, x))
}
