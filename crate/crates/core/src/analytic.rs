//! Closed-form spectra and autocorrelations of the total load.
//!
//! Spectra are one-sided: the `+m` and `-m` harmonics are folded into a
//! single entry at `m * f0`, so each weight is the signal power (kW²) that
//! the component contributes. A two-sided plot splits every line or bell
//! weight evenly between `±f` and keeps the DC weight at 0.
//!
//! Dirac lines are stored as `(frequency, power)` and never sampled.

use std::f64::consts::PI;
use std::io::Write;

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::er_model::ErConfig;
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::harmonics::{fundamental_frequency, FsCoefficients};
use crate::signal::sig9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Line {
    pub freq: f64,
    pub power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bell {
    pub center: f64,
    pub std: f64,
    pub power: f64,
}

impl Bell {
    /// One-sided power density at `freq`, kW²/Hz.
    pub fn density(&self, freq: f64) -> f64 {
        let z = (freq - self.center) / self.std;
        self.power * (-0.5 * z * z).exp() / (self.std * (2.0 * PI).sqrt())
    }
}

/// Analytical spectrum: DC power, harmonic lines and Gaussian bells.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Spectrum {
    pub dc_weight: f64,
    pub lines: Vec<Line>,
    pub bells: Vec<Bell>,
}

impl Spectrum {
    /// Power of every non-DC component.
    pub fn harmonic_power(&self) -> f64 {
        self.lines.iter().map(|l| l.power).sum::<f64>()
            + self.bells.iter().map(|b| b.power).sum::<f64>()
    }

    /// Mean-square value of the signal.
    pub fn total_power(&self) -> f64 {
        self.dc_weight + self.harmonic_power()
    }

    /// Writes `kind,freq_hz,std_hz,power_kw2` rows; `kind` is `dc`, `line`
    /// or `bell`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "kind,freq_hz,std_hz,power_kw2")?;
        writeln!(out, "dc,0,0,{}", sig9(self.dc_weight))?;
        for l in &self.lines {
            writeln!(out, "line,{},0,{}", sig9(l.freq), sig9(l.power))?;
        }
        for b in &self.bells {
            writeln!(out, "bell,{},{},{}", sig9(b.center), sig9(b.std), sig9(b.power))?;
        }
        Ok(())
    }
}

/// Scenario-specific part of the analytic model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum AnalyticScenario {
    /// Equal timings, deterministic equal densities.
    S1,
    S2,
    S3 { q: usize },
    S4 { speed_std: f64 },
}

/// Inputs shared by every analytic spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticParams {
    pub er: ErConfig,
    pub rx_len: f64,
    pub n: usize,
    pub density_mean: f64,
    /// Ignored by S1.
    pub density_std: f64,
    /// Common speed, or mean speed for S4.
    pub speed: f64,
    pub scenario: AnalyticScenario,
}

impl AnalyticParams {
    fn validate(&self) -> Result<()> {
        ensure_positive("rx_len", self.rx_len)?;
        ensure_positive("density_mean", self.density_mean)?;
        ensure_non_negative("density_std", self.density_std)?;
        ensure_positive("speed", self.speed)?;
        if self.n == 0 {
            return Err(Error::domain("n", 0.0, "must be >= 1"));
        }
        match self.scenario {
            AnalyticScenario::S3 { q } => {
                if q == 0 {
                    return Err(Error::domain("q", 0.0, "must be >= 1"));
                }
                if q > self.n {
                    return Err(Error::PlatoonTooLarge { q, n: self.n });
                }
                if !self.n.is_multiple_of(q) {
                    return Err(Error::PlatoonIndivisible { q, n: self.n });
                }
            }
            AnalyticScenario::S4 { speed_std } => {
                ensure_non_negative("speed_std", speed_std)?;
            }
            AnalyticScenario::S1 | AnalyticScenario::S2 => {}
        }
        Ok(())
    }

    fn second_moment(&self) -> f64 {
        self.density_mean.powi(2) + self.density_std.powi(2)
    }

    /// `(N² mu² + N sigma²) c0²` for S2–S4, `(N a c0)²` for S1.
    fn dc_weight(&self, c0: f64) -> f64 {
        let n = self.n as f64;
        let mu = self.density_mean;
        match self.scenario {
            AnalyticScenario::S1 => (n * mu * c0).powi(2),
            _ => (n * n * mu * mu + n * self.density_std.powi(2)) * c0 * c0,
        }
    }

    /// Factor `K` such that harmonic `m` carries one-sided power `2 K c_m²`.
    fn harmonic_factor(&self) -> f64 {
        let n = self.n as f64;
        let mu = self.density_mean;
        match self.scenario {
            AnalyticScenario::S1 => (n * mu).powi(2),
            AnalyticScenario::S2 | AnalyticScenario::S4 { .. } => n * self.second_moment(),
            AnalyticScenario::S3 { q } => n * (q as f64 * mu * mu + self.density_std.powi(2)),
        }
    }

    pub fn coefficients(&self) -> Result<FsCoefficients> {
        FsCoefficients::new(&self.er, self.rx_len)
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        self.validate()?;
        let coeffs = self.coefficients()?;
        let f0 = fundamental_frequency(&self.er, self.speed)?;
        let factor = self.harmonic_factor();
        let mut spectrum = Spectrum {
            dc_weight: self.dc_weight(coeffs.c0()),
            ..Spectrum::default()
        };
        let sigma_f = match self.scenario {
            AnalyticScenario::S4 { speed_std } => speed_std / self.er.seg_len(),
            _ => 0.0,
        };
        for (m, c) in coeffs.values().iter().enumerate().skip(1) {
            let power = 2.0 * factor * c * c;
            let mf = m as f64;
            if sigma_f > 0.0 {
                spectrum.bells.push(Bell {
                    center: mf * f0,
                    std: mf * sigma_f,
                    power,
                });
            } else {
                spectrum.lines.push(Line {
                    freq: mf * f0,
                    power,
                });
            }
        }
        Ok(spectrum)
    }

    /// Closed-form `R_p(tau)` at each lag (seconds).
    pub fn autocorrelation(&self, lags: &[f64]) -> Result<AutocorrSeries> {
        self.validate()?;
        if self.scenario == AnalyticScenario::S1 {
            return Err(Error::NotStationary("s1"));
        }
        let coeffs = self.coefficients()?;
        let dc = self.dc_weight(coeffs.c0());
        let factor = self.harmonic_factor();
        let seg = self.er.seg_len();
        let omega = 2.0 * PI * self.speed / seg;
        let sigma_omega = match self.scenario {
            AnalyticScenario::S4 { speed_std } => 2.0 * PI * speed_std / seg,
            _ => 0.0,
        };
        let values = lags
            .iter()
            .map(|&tau| {
                let harmonics: f64 = coeffs
                    .values()
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(m, c)| {
                        let mf = m as f64;
                        let decay = (-0.5 * (mf * sigma_omega * tau).powi(2)).exp();
                        c * c * (mf * omega * tau).cos() * decay
                    })
                    .sum();
                dc + 2.0 * factor * harmonics
            })
            .collect();
        Ok(AutocorrSeries {
            lags: lags.to_vec(),
            values,
        })
    }
}

/// Autocorrelation samples, `values[i] = R(lags[i])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutocorrSeries {
    pub lags: Vec<f64>,
    pub values: Vec<f64>,
}

impl AutocorrSeries {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "lag_s,r_kw2")?;
        for (l, v) in self.lags.iter().zip(&self.values) {
            writeln!(out, "{},{}", sig9(*l), sig9(*v))?;
        }
        Ok(())
    }
}

fn base(er: &ErConfig, rx_len: f64, n: usize, mu: f64, sigma: f64, v: f64, s: AnalyticScenario) -> AnalyticParams {
    AnalyticParams {
        er: *er,
        rx_len,
        n,
        density_mean: mu,
        density_std: sigma,
        speed: v,
        scenario: s,
    }
}

/// Synchronized fleet of `n` EVs with common density `a`.
pub fn psd_s1(er: &ErConfig, rx_len: f64, speed: f64, n: usize, a: f64) -> Result<Spectrum> {
    base(er, rx_len, n, a, 0.0, speed, AnalyticScenario::S1).spectrum()
}

pub fn psd_s2(er: &ErConfig, rx_len: f64, speed: f64, n: usize, mu: f64, sigma: f64) -> Result<Spectrum> {
    base(er, rx_len, n, mu, sigma, speed, AnalyticScenario::S2).spectrum()
}

/// Platoons of `q` synchronized EVs; `q` must divide `n`.
pub fn psd_s3(
    er: &ErConfig,
    rx_len: f64,
    speed: f64,
    n: usize,
    q: usize,
    mu: f64,
    sigma: f64,
) -> Result<Spectrum> {
    base(er, rx_len, n, mu, sigma, speed, AnalyticScenario::S3 { q }).spectrum()
}

/// Gaussian speeds. With `speed_std = 0` the bells collapse to the lines of
/// [`psd_s2`].
pub fn psd_s4(
    er: &ErConfig,
    rx_len: f64,
    n: usize,
    mu: f64,
    sigma: f64,
    speed_mean: f64,
    speed_std: f64,
) -> Result<Spectrum> {
    base(er, rx_len, n, mu, sigma, speed_mean, AnalyticScenario::S4 { speed_std }).spectrum()
}

/// Total harmonic content of a line and/or bell spectrum, in percent.
pub fn thc_continuous(s: &Spectrum) -> Result<f64> {
    if s.dc_weight <= 0.0 {
        return Err(Error::UndefinedThc);
    }
    Ok(100.0 * (s.harmonic_power() / s.dc_weight).sqrt())
}

/// Expected THC under deterministic equal densities, from the single-EV THC.
pub fn thc_scaling(base_thc: f64, scenario: AnalyticScenario, n: usize, q: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("n", 0.0, "must be >= 1"));
    }
    let n = n as f64;
    Ok(match scenario {
        AnalyticScenario::S1 => base_thc,
        AnalyticScenario::S2 | AnalyticScenario::S4 { .. } => base_thc / n.sqrt(),
        AnalyticScenario::S3 { .. } => {
            if q == 0 {
                return Err(Error::domain("q", 0.0, "must be >= 1"));
            }
            base_thc * (q as f64 / n).sqrt()
        }
    })
}

/// Fourier coefficients of a deterministic equal-speed fleet:
/// `c_m * sum_n a_n exp(-j m w0 t_n)` for `m = 0..=M`.
pub fn fleet_coefficients(
    coeffs: &FsCoefficients,
    fundamental_hz: f64,
    densities: &[f64],
    timings: &[f64],
) -> Vec<Complex64> {
    let w0 = 2.0 * PI * fundamental_hz;
    coeffs
        .values()
        .iter()
        .enumerate()
        .map(|(m, c)| {
            let sum: Complex64 = densities
                .iter()
                .zip(timings)
                .map(|(a, t)| Complex64::from_polar(*a, -(m as f64) * w0 * t))
                .sum();
            sum * c
        })
        .collect()
}

/// THC of a line spectrum given by fleet coefficients, in percent.
pub fn fleet_thc(fleet_coeffs: &[Complex64]) -> Result<f64> {
    let c0 = fleet_coeffs.first().map_or(0.0, |c| c.norm());
    if c0 == 0.0 {
        return Err(Error::UndefinedThc);
    }
    let harmonic: f64 = fleet_coeffs.iter().skip(1).map(|c| c.norm_sqr()).sum();
    Ok(100.0 * (2.0 * harmonic).sqrt() / c0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::er_model::INDOT_RX_LEN;
    use crate::harmonics::thc_line;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const V: f64 = 24.56;
    const MU: f64 = 94.45;
    const SIGMA: f64 = 5.55;

    fn er() -> ErConfig {
        ErConfig::indot(16_093.44).unwrap()
    }

    fn db(x: f64) -> f64 {
        10.0 * x.log10()
    }

    fn params(n: usize, sigma: f64, s: AnalyticScenario) -> AnalyticParams {
        base(&er(), INDOT_RX_LEN, n, MU, sigma, V, s)
    }

    #[test]
    fn s1_ratios_independent_of_n() {
        let e = er();
        let c = FsCoefficients::new(&e, INDOT_RX_LEN).unwrap();
        for n in [1, 10, 200] {
            let s = psd_s1(&e, INDOT_RX_LEN, V, n, MU).unwrap();
            let dc_amp = s.dc_weight.sqrt();
            for (m, line) in s.lines.iter().enumerate().take(10) {
                let amp = (line.power / 2.0).sqrt();
                let ratio = amp / dc_amp;
                assert!((ratio - c.get(m + 1).abs() / c.c0()).abs() < 1e-12);
            }
        }
        let s1 = psd_s1(&e, INDOT_RX_LEN, V, 10, MU).unwrap();
        let s2 = psd_s1(&e, INDOT_RX_LEN, V, 20, MU).unwrap();
        assert!((s2.lines[0].power / s1.lines[0].power - 4.0).abs() < 1e-12);
        let thc = thc_continuous(&s1).unwrap();
        assert!((thc - thc_line(&c).unwrap()).abs() < 1e-9);
        assert!((thc - 26.0).abs() < 0.5);
    }

    #[test]
    fn s2_scaling_in_db() {
        let e = er();
        let a = psd_s2(&e, INDOT_RX_LEN, V, 192, MU, 0.0).unwrap();
        let b = psd_s2(&e, INDOT_RX_LEN, V, 64, MU, 0.0).unwrap();
        assert!((db(a.dc_weight / b.dc_weight) - 9.54).abs() < 0.01);
        assert!((db(a.lines[0].power / b.lines[0].power) - 4.77).abs() < 0.01);
        let c = FsCoefficients::new(&e, INDOT_RX_LEN).unwrap();
        let amp = (a.lines[0].power / 2.0).sqrt();
        assert!((amp - 192f64.sqrt() * MU * c.get(1).abs()).abs() < 1e-9 * amp);
    }

    #[test]
    fn s2_lines_at_harmonics() {
        let e = er();
        let s = psd_s2(&e, INDOT_RX_LEN, V, 64, MU, SIGMA).unwrap();
        let f0 = V / e.seg_len();
        for (i, l) in s.lines.iter().enumerate() {
            assert!((l.freq - (i + 1) as f64 * f0).abs() < 1e-9);
        }
        assert!(s.lines[4].power < 1e-20 * s.lines[0].power.max(1.0) * 1e10);
    }

    #[test]
    fn receiver_spanning_period_is_pure_dc() {
        let e = ErConfig::new(3.0, 1.0, 400.0, 100.0).unwrap();
        let s = psd_s2(&e, 4.0, 10.0, 10, 50.0, 1.0).unwrap();
        assert!(s.harmonic_power() < 1e-20 * s.dc_weight);
        assert!(thc_continuous(&s).unwrap() < 1e-8);
    }

    #[test]
    fn s3_reduces_to_s2_and_s1() {
        let e = er();
        let s2 = psd_s2(&e, INDOT_RX_LEN, V, 60, MU, SIGMA).unwrap();
        let s3 = psd_s3(&e, INDOT_RX_LEN, V, 60, 1, MU, SIGMA).unwrap();
        assert_eq!(s2, s3);
        let q5 = psd_s3(&e, INDOT_RX_LEN, V, 60, 5, MU, 0.0).unwrap();
        let q1 = psd_s3(&e, INDOT_RX_LEN, V, 60, 1, MU, 0.0).unwrap();
        assert!((db(q5.lines[0].power / q1.lines[0].power) - 6.98).abs() < 0.01);
        let qn = psd_s3(&e, INDOT_RX_LEN, V, 60, 60, MU, 0.0).unwrap();
        let s1 = psd_s1(&e, INDOT_RX_LEN, V, 60, MU).unwrap();
        for (a, b) in qn.lines.iter().zip(&s1.lines) {
            assert!((a.power - b.power).abs() <= 1e-9 * b.power.max(1e-12));
        }
        assert!(matches!(
            psd_s3(&e, INDOT_RX_LEN, V, 60, 7, MU, 0.0),
            Err(Error::PlatoonIndivisible { .. })
        ));
        assert!(psd_s3(&e, INDOT_RX_LEN, V, 60, 61, MU, 0.0).is_err());
    }

    #[test]
    fn s4_bells() {
        let e = er();
        let s4 = psd_s4(&e, INDOT_RX_LEN, 192, MU, SIGMA, V, 1.23).unwrap();
        let s2 = psd_s2(&e, INDOT_RX_LEN, V, 192, MU, SIGMA).unwrap();
        let f0 = V / e.seg_len();
        assert!((f0 - 5.37).abs() < 0.01);
        for (m, (b, l)) in s4.bells.iter().zip(&s2.lines).enumerate() {
            let m = (m + 1) as f64;
            assert!((b.center - m * f0).abs() < 1e-9);
            assert!((b.std - m * 1.23 / e.seg_len()).abs() < 1e-12);
            assert_eq!(b.power, l.power);
        }
        // Peak density falls as 1/m relative to power.
        let peak = |b: &Bell| b.density(b.center) / b.power;
        assert!((peak(&s4.bells[0]) / peak(&s4.bells[2]) - 3.0).abs() < 1e-9);
        assert!((thc_continuous(&s4).unwrap() - thc_continuous(&s2).unwrap()).abs() < 1e-12);
        let degenerate = psd_s4(&e, INDOT_RX_LEN, 192, MU, SIGMA, V, 0.0).unwrap();
        assert_eq!(degenerate, s2);
    }

    #[test]
    fn total_power_equals_zero_lag() {
        for s in [
            AnalyticScenario::S2,
            AnalyticScenario::S3 { q: 4 },
            AnalyticScenario::S4 { speed_std: 1.23 },
        ] {
            let p = params(64, SIGMA, s);
            let r0 = p.autocorrelation(&[0.0]).unwrap().values[0];
            let total = p.spectrum().unwrap().total_power();
            assert!((r0 - total).abs() < 1e-12 * total);
        }
    }

    #[test]
    fn s1_has_no_autocorrelation() {
        assert!(matches!(
            params(8, 0.0, AnalyticScenario::S1).autocorrelation(&[0.0]),
            Err(Error::NotStationary(_))
        ));
    }

    #[test]
    fn s2_autocorrelation_is_periodic() {
        let p = params(64, SIGMA, AnalyticScenario::S2);
        let period = er().seg_len() / V;
        let lags: Vec<f64> = (0..200).map(|i| i as f64 * 0.0123).collect();
        let shifted: Vec<f64> = lags.iter().map(|l| l + 3.0 * period).collect();
        let a = p.autocorrelation(&lags).unwrap();
        let b = p.autocorrelation(&shifted).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-9 * x);
        }
    }

    #[test]
    fn s4_autocorrelation_decays_to_dc() {
        let p = params(64, SIGMA, AnalyticScenario::S4 { speed_std: 1.23 });
        let sigma_omega = 2.0 * PI * 1.23 / er().seg_len();
        let r = p.autocorrelation(&[0.0, 10.0 / sigma_omega]).unwrap();
        let dc = p.spectrum().unwrap().dc_weight;
        let harmonic0 = r.values[0] - dc;
        assert!((r.values[1] - dc).abs() < 1e-12 * harmonic0.max(1.0) * 1e3);
    }

    /// Recovers line powers from the autocorrelation by projecting one
    /// period onto cosines (midpoint quadrature).
    #[test]
    fn s2_lines_from_autocorrelation_transform() {
        for s in [AnalyticScenario::S2, AnalyticScenario::S3 { q: 4 }] {
            let p = params(64, SIGMA, s);
            let spectrum = p.spectrum().unwrap();
            let period = er().seg_len() / V;
            let n = 4096;
            let lags: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * period / n as f64).collect();
            let r = p.autocorrelation(&lags).unwrap();
            for m in 1..=6 {
                let w = 2.0 * PI * m as f64 / period;
                let proj: f64 = lags
                    .iter()
                    .zip(&r.values)
                    .map(|(t, v)| (v - spectrum.dc_weight) * (w * t).cos())
                    .sum::<f64>()
                    * 2.0
                    / n as f64;
                let line = spectrum.lines[m - 1].power;
                let scale = spectrum.lines[0].power;
                assert!((proj - line).abs() < 0.005 * line.max(1e-3 * scale), "m = {m}");
            }
        }
    }

    /// One-sided density from the cosine transform of the autocorrelation,
    /// integrated over each bell.
    #[test]
    fn s4_bells_from_autocorrelation_transform() {
        let p = params(64, SIGMA, AnalyticScenario::S4 { speed_std: 1.23 });
        let spectrum = p.spectrum().unwrap();
        let dc = spectrum.dc_weight;
        // R decays within a few seconds; tabulate it once.
        let dtau = 1e-3;
        let lags: Vec<f64> = (0..8000).map(|i| (i as f64 + 0.5) * dtau).collect();
        let r = p.autocorrelation(&lags).unwrap();
        let density = |f: f64| -> f64 {
            4.0 * lags
                .iter()
                .zip(&r.values)
                .map(|(t, v)| (v - dc) * (2.0 * PI * f * t).cos())
                .sum::<f64>()
                * dtau
        };
        let f0 = V / er().seg_len();
        for m in 1..=3 {
            let bell = spectrum.bells[m - 1];
            let (lo, hi) = (bell.center - 0.5 * f0, bell.center + 0.5 * f0);
            let steps = 400;
            let df = (hi - lo) / steps as f64;
            let power: f64 = (0..steps).map(|i| density(lo + (i as f64 + 0.5) * df)).sum::<f64>() * df;
            assert!((power - bell.power).abs() < 0.005 * bell.power, "m = {m}: {power} vs {}", bell.power);
        }
    }

    #[test]
    fn thc_scales_with_fleet_and_platoon_size() {
        let e = er();
        let thc_h = thc_line(&FsCoefficients::new(&e, INDOT_RX_LEN).unwrap()).unwrap();
        for n in [16, 64, 192] {
            let s2 = psd_s2(&e, INDOT_RX_LEN, V, n, MU, 0.0).unwrap();
            let expect = thc_scaling(thc_h, AnalyticScenario::S2, n, 1).unwrap();
            assert!((thc_continuous(&s2).unwrap() - expect).abs() < 1e-9);
            for q in [1, 4, 8] {
                let s3 = psd_s3(&e, INDOT_RX_LEN, V, n, q, MU, 0.0).unwrap();
                let expect = thc_scaling(thc_h, AnalyticScenario::S3 { q }, n, q).unwrap();
                assert!((thc_continuous(&s3).unwrap() - expect).abs() < 1e-9);
            }
        }
        let s2_192 = thc_scaling(26.0, AnalyticScenario::S2, 192, 1).unwrap();
        assert!((s2_192 - 1.88).abs() < 0.005);
        assert!((thc_scaling(26.0, AnalyticScenario::S2, 64, 1).unwrap() - 3.25).abs() < 1e-9);
        assert_eq!(thc_scaling(26.0, AnalyticScenario::S3 { q: 30 }, 30, 30).unwrap(), 26.0);
        assert!(thc_continuous(&Spectrum::default()).is_err());
    }

    #[test]
    fn fleet_thc_bounded_by_single_ev() {
        let e = er();
        let c = FsCoefficients::new(&e, INDOT_RX_LEN).unwrap();
        let thc_h = thc_line(&c).unwrap();
        let f0 = V / e.seg_len();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let n = rng.random_range(1..30);
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..111.0)).collect();
            let t: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0 / f0)).collect();
            let thc = fleet_thc(&fleet_coefficients(&c, f0, &a, &t)).unwrap();
            assert!(thc <= thc_h + 1e-9);
            let equal = vec![t[0]; n];
            let thc_eq = fleet_thc(&fleet_coefficients(&c, f0, &a, &equal)).unwrap();
            assert!((thc_eq - thc_h).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_layout() {
        let s = psd_s4(&er(), INDOT_RX_LEN, 4, MU, 0.0, V, 1.0).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("kind,freq_hz,std_hz,power_kw2"));
        assert!(lines.next().unwrap().starts_with("dc,0,0,"));
        assert!(lines.next().unwrap().starts_with("bell,"));
    }
}
