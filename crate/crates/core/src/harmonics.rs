//! Fourier series of the constant-speed single-EV pulse train.
//!
//! At constant speed an EV draws a periodic train of trapezoidal pulses.
//! Shifted to be even about `t = 0`, its Fourier coefficients are real and
//! depend only on the coil and receiver lengths; the speed only sets the
//! fundamental frequency.

use std::f64::consts::PI;

use serde::Serialize;

use crate::er_model::ErConfig;
use crate::error::{ensure_positive, Error, Result};

/// Minimum number of harmonics kept before the tail test applies.
pub const MIN_ORDER: usize = 50;
/// Hard cap on the number of harmonics.
pub const MAX_ORDER: usize = 500;
/// Relative size `|c_M| / c_0` below which accumulation stops.
pub const TAIL_RATIO: f64 = 1e-8;

/// Inter-area oscillation band edge.
pub const INTER_AREA_LIMIT_HZ: f64 = 2.0;

/// Coefficients `c_0..=c_M` of the pulse train, in meters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FsCoefficients {
    values: Vec<f64>,
    tx_len: f64,
    rx_len: f64,
    seg_len: f64,
}

impl FsCoefficients {
    /// Coefficients of the given geometry with the default truncation rule.
    pub fn new(er: &ErConfig, rx_len: f64) -> Result<Self> {
        ensure_positive("rx_len", rx_len)?;
        let c0 = fourier_coefficient(er, rx_len, 0);
        let mut values = vec![c0];
        for m in 1..=MAX_ORDER {
            let c = fourier_coefficient(er, rx_len, m);
            values.push(c);
            if m >= MIN_ORDER && c.abs() / c0 < TAIL_RATIO {
                break;
            }
        }
        Ok(Self::with_geometry(values, er, rx_len))
    }

    /// Coefficients `c_0..=c_order`.
    pub fn with_order(er: &ErConfig, rx_len: f64, order: usize) -> Result<Self> {
        ensure_positive("rx_len", rx_len)?;
        let values = (0..=order)
            .map(|m| fourier_coefficient(er, rx_len, m))
            .collect();
        Ok(Self::with_geometry(values, er, rx_len))
    }

    fn with_geometry(values: Vec<f64>, er: &ErConfig, rx_len: f64) -> Self {
        Self {
            values,
            tx_len: er.tx_len(),
            rx_len,
            seg_len: er.seg_len(),
        }
    }

    /// Arbitrary coefficient values with no geometry attached.
    pub fn from_values(values: Vec<f64>) -> Self {
        Self {
            values,
            tx_len: f64::NAN,
            rx_len: f64::NAN,
            seg_len: f64::NAN,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn c0(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// `c_m`, zero beyond the truncation order.
    pub fn get(&self, m: usize) -> f64 {
        self.values.get(m).copied().unwrap_or(0.0)
    }

    /// Truncation order M.
    pub fn order(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    /// `(tx_len, rx_len, seg_len)` the coefficients were computed for.
    pub fn geometry(&self) -> (f64, f64, f64) {
        (self.tx_len, self.rx_len, self.seg_len)
    }

    /// `sum_{m>=1} c_m^2`.
    pub fn harmonic_energy(&self) -> f64 {
        self.values.iter().skip(1).map(|c| c * c).sum()
    }
}

/// m-th Fourier coefficient of the even pulse train, in meters.
pub fn fourier_coefficient(er: &ErConfig, rx_len: f64, m: usize) -> f64 {
    let d = er.seg_len();
    if m == 0 {
        return er.tx_len() * rx_len / d;
    }
    let mf = m as f64;
    d / (mf * mf * PI * PI) * (mf * PI * rx_len / d).sin() * (mf * PI * er.tx_len() / d).sin()
}

/// Fundamental frequency `v / D` in Hz.
pub fn fundamental_frequency(er: &ErConfig, speed: f64) -> Result<f64> {
    ensure_positive("speed", speed)?;
    Ok(speed / er.seg_len())
}

/// Total harmonic content of a line spectrum, in percent.
pub fn thc_line(coeffs: &FsCoefficients) -> Result<f64> {
    let c0 = coeffs.c0();
    if c0 == 0.0 {
        return Err(Error::UndefinedThc);
    }
    Ok(100.0 * (2.0 * coeffs.harmonic_energy()).sqrt() / c0.abs())
}

/// Contribution of harmonic `m` alone to the THC, in percentage points.
pub fn thc_share(coeffs: &FsCoefficients, m: usize) -> Result<f64> {
    let c0 = coeffs.c0();
    if c0 == 0.0 {
        return Err(Error::UndefinedThc);
    }
    Ok(100.0 * 2f64.sqrt() * coeffs.get(m).abs() / c0.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowFrequencyRisk {
    /// Fundamental below the 2 Hz inter-area band edge.
    pub at_risk: bool,
    /// Speed below which the fundamental enters the band, `2 * D` m/s.
    pub critical_speed: f64,
    pub fundamental_hz: f64,
}

pub fn low_frequency_risk(er: &ErConfig, speed: f64) -> Result<LowFrequencyRisk> {
    let fundamental_hz = fundamental_frequency(er, speed)?;
    let critical_speed = INTER_AREA_LIMIT_HZ * er.seg_len();
    Ok(LowFrequencyRisk {
        at_risk: speed < critical_speed,
        critical_speed,
        fundamental_hz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::er_model::{periodic_overlap, INDOT_RX_LEN};
    use proptest::prelude::*;

    fn indot() -> ErConfig {
        ErConfig::indot(400.0).unwrap()
    }

    #[test]
    fn indot_coefficients() {
        let er = indot();
        let c0 = fourier_coefficient(&er, INDOT_RX_LEN, 0);
        assert!((c0 - 1.44).abs() < 2e-3, "{c0}");
        assert!(fourier_coefficient(&er, INDOT_RX_LEN, 5).abs() < 1e-12);
        let ratio = fourier_coefficient(&er, INDOT_RX_LEN, 1) / c0;
        assert!((ratio - 0.18).abs() < 0.005, "{ratio}");
    }

    #[test]
    fn coefficient_bound() {
        let er = indot();
        let d = er.seg_len();
        for m in 1..200 {
            let bound = d / ((m * m) as f64 * PI * PI);
            assert!(fourier_coefficient(&er, INDOT_RX_LEN, m).abs() <= bound + 1e-15);
        }
    }

    #[test]
    fn truncation_rule() {
        let c = FsCoefficients::new(&indot(), INDOT_RX_LEN).unwrap();
        assert!(c.order() >= MIN_ORDER && c.order() <= MAX_ORDER);
        // Generic geometry has no exact zeros and runs to the cap.
        let er = ErConfig::new(3.0, 1.1, 400.0, 100.0).unwrap();
        let c = FsCoefficients::new(&er, 1.7).unwrap();
        assert!(c.order() >= MIN_ORDER);
    }

    #[test]
    fn indot_thc() {
        let c = FsCoefficients::new(&indot(), INDOT_RX_LEN).unwrap();
        let thc = thc_line(&c).unwrap();
        assert!((thc - 26.0).abs() < 0.5, "{thc}");
        let first = thc_share(&c, 1).unwrap();
        assert!((first - 25.45).abs() < 0.5, "{first}");
        assert!(first < thc);
        // Deep truncation changes the reported value by far less than 0.01 pp.
        let deep = FsCoefficients::with_order(&indot(), INDOT_RX_LEN, 20_000).unwrap();
        assert!((thc_line(&deep).unwrap() - thc).abs() < 1e-3);
    }

    #[test]
    fn thc_edge_cases() {
        assert_eq!(thc_line(&FsCoefficients::from_values(vec![2.0])).unwrap(), 0.0);
        assert!(matches!(
            thc_line(&FsCoefficients::from_values(vec![0.0, 1.0])),
            Err(Error::UndefinedThc)
        ));
    }

    #[test]
    fn fundamental() {
        let er = indot();
        let f0 = fundamental_frequency(&er, 24.56).unwrap();
        assert!((f0 - 5.38).abs() < 0.01, "{f0}");
        let f2 = fundamental_frequency(&er, 2.0 * 24.56).unwrap();
        assert!((f2 - 2.0 * f0).abs() < 1e-12);
        assert!(fundamental_frequency(&er, 0.0).is_err());
        assert!(fundamental_frequency(&er, -1.0).is_err());
        let v2 = 2.0 * er.seg_len();
        assert!((fundamental_frequency(&er, v2).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn risk_flag() {
        let er = indot();
        let r = low_frequency_risk(&er, 24.56).unwrap();
        assert!(!r.at_risk);
        assert!((r.critical_speed - 9.14).abs() < 0.01);
        assert!(low_frequency_risk(&er, 5.0).unwrap().at_risk);
        let vc = r.critical_speed;
        assert!(!low_frequency_risk(&er, vc).unwrap().at_risk);
        assert!(low_frequency_risk(&er, vc * (1.0 - 1e-12)).unwrap().at_risk);
    }

    /// Mean and cosine projections of one densely sampled period of the
    /// pulse train, built from the overlap function rather than the formula.
    fn sampled_coefficients(er: &ErConfig, rx_len: f64, orders: usize, n: usize) -> Vec<f64> {
        let d = er.seg_len();
        let shift = 0.5 * (rx_len + er.tx_len());
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                let x = d * i as f64 / n as f64;
                periodic_overlap(d, er.tx_len(), rx_len, x + shift)
            })
            .collect();
        (0..=orders)
            .map(|m| {
                let s: f64 = samples
                    .iter()
                    .enumerate()
                    .map(|(i, h)| h * (2.0 * PI * (m * i) as f64 / n as f64).cos())
                    .sum();
                s / n as f64
            })
            .collect()
    }

    #[test]
    fn closed_form_matches_sampled_period() {
        let er = indot();
        let c0 = fourier_coefficient(&er, INDOT_RX_LEN, 0);
        let numeric = sampled_coefficients(&er, INDOT_RX_LEN, 20, 1 << 18);
        for (m, num) in numeric.iter().enumerate() {
            let exact = fourier_coefficient(&er, INDOT_RX_LEN, m);
            if m % 5 == 0 && m > 0 {
                assert!((num - exact).abs() < 1e-6 * c0, "m = {m}");
            } else {
                assert!((num - exact).abs() < 1e-6 * exact.abs(), "m = {m}: {num} vs {exact}");
            }
        }
    }

    #[test]
    fn closed_form_matches_sampled_period_long_receiver() {
        // Receiver longer than the coil.
        let er = ErConfig::new(1.5, 0.8, 400.0, 100.0).unwrap();
        let numeric = sampled_coefficients(&er, 2.1, 12, 1 << 18);
        for (m, num) in numeric.iter().enumerate() {
            let exact = fourier_coefficient(&er, 2.1, m);
            assert!((num - exact).abs() < 1e-6 * exact.abs().max(1e-3), "m = {m}");
        }
    }

    proptest! {
        #[test]
        fn swap_symmetry(tx in 0.5..5.0f64, rx in 0.5..5.0f64, gap in 0.0..3.0f64, m in 0usize..40) {
            let d = tx + gap;
            // Swapping tx and rx keeps D by adjusting the gap.
            prop_assume!(d - rx > 0.0);
            let a = ErConfig::new(tx, gap, 100.0, 100.0).unwrap();
            let b = ErConfig::new(rx, d - rx, 100.0, 100.0).unwrap();
            let ca = fourier_coefficient(&a, rx, m);
            let cb = fourier_coefficient(&b, tx, m);
            prop_assert!((ca - cb).abs() < 1e-12);
        }

        #[test]
        fn thc_scale_invariant(scale in 1e-3..1e3f64) {
            let c = FsCoefficients::new(&ErConfig::indot(400.0).unwrap(), 1.8).unwrap();
            let scaled = FsCoefficients::from_values(c.values().iter().map(|v| v * scale).collect());
            prop_assert!((thc_line(&c).unwrap() - thc_line(&scaled).unwrap()).abs() < 1e-9);
        }
    }
}
