//! Periodograms, band integration and empirical THC of sampled loads.
//!
//! Normalization: with window `w`, zero-padded length `nfft` and sample rate
//! `fs`, the one-sided density is `2 |X_k|² / (fs Σw²)` on `k = 0..=nfft/2`.
//! Each bin owns the cell `[f_k - Δ/2, f_k + Δ/2]` clipped to `[0, fs/2]`, so
//! the DC and Nyquist bins own half cells and the integral over `[0, fs/2]`
//! equals the window-weighted mean square `Σ(w x)² / Σw²`.
//! The DC readout `|X_0|² / (Σw)²` is the squared weighted mean, which for a
//! constant signal is exactly its square.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::analytic::AutocorrSeries;
use crate::error::{ensure_positive, Error, Result};
use crate::signal::{sig9, LoadSignal};

/// Lower edge of the first harmonic band in empirical THC, Hz.
pub const DEFAULT_GUARD_HZ: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Rect,
    #[default]
    Hanning,
}

impl Window {
    /// Periodic window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rect => vec![1.0; n],
            Window::Hanning => (0..n)
                .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / n as f64).cos()))
                .collect(),
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Window::Rect => "rect",
            Window::Hanning => "hanning",
        })
    }
}

impl FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "rect" | "rectangular" => Ok(Window::Rect),
            "hanning" | "hann" => Ok(Window::Hanning),
            other => Err(format!("unknown window `{other}` (expected rect or hanning)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatedSpectrum {
    pub freqs: Vec<f64>,
    /// One-sided density, kW²/Hz.
    pub density: Vec<f64>,
    pub window: Window,
    /// `fs Σw² / 2`, the divisor applied to `|X_k|²`.
    pub norm: f64,
    /// Duration of the analysed record, s.
    pub t_p: f64,
    /// Squared weighted time average, kW².
    pub dc_power: f64,
}

impl EstimatedSpectrum {
    /// Spacing of the zero-padded grid.
    pub fn bin_width(&self) -> f64 {
        if self.freqs.len() < 2 {
            return 0.0;
        }
        self.freqs[1] - self.freqs[0]
    }

    /// Native resolution `1 / T_p` of the record.
    pub fn resolution(&self) -> f64 {
        1.0 / self.t_p
    }

    pub fn nyquist(&self) -> f64 {
        self.freqs.last().copied().unwrap_or(0.0)
    }

    /// Density integrated over the whole grid.
    pub fn total_power(&self) -> f64 {
        self.integrate(0.0, self.nyquist())
    }

    /// Integral of the piecewise-constant density over `[lo, hi]`, clipped
    /// to the grid.
    fn integrate(&self, lo: f64, hi: f64) -> f64 {
        self.cells(lo, hi).map(|(_, mass)| mass).sum()
    }

    /// `(frequency, mass)` of every bin cell overlapping `[lo, hi]`.
    fn cells(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let df = self.bin_width();
        let nyq = self.nyquist();
        let (lo, hi) = (lo.max(0.0), hi.min(nyq));
        let first = if df > 0.0 {
            ((lo / df - 0.5).floor().max(0.0)) as usize
        } else {
            0
        };
        self.freqs
            .iter()
            .zip(&self.density)
            .skip(first)
            .take_while(move |(f, _)| **f - 0.5 * df <= hi)
            .filter_map(move |(&f, &d)| {
                let a = (f - 0.5 * df).max(0.0).max(lo);
                let b = (f + 0.5 * df).min(nyq).min(hi);
                (b > a).then_some((f, d * (b - a)))
            })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "freq_hz,density_kw2_per_hz")?;
        for (f, d) in self.freqs.iter().zip(&self.density) {
            writeln!(out, "{},{}", sig9(*f), sig9(*d))?;
        }
        Ok(())
    }
}

pub fn periodogram(sig: &LoadSignal, window: Window) -> Result<EstimatedSpectrum> {
    let n = sig.len();
    if n < 2 {
        return Err(Error::SignalTooShort(n));
    }
    let fs = sig.sample_rate;
    let nfft = n.next_power_of_two();
    let w = window.coefficients(n);
    let sum_w: f64 = w.iter().sum();
    let sum_w2: f64 = w.iter().map(|x| x * x).sum();

    let mut buf: Vec<Complex64> = sig
        .samples
        .iter()
        .zip(&w)
        .map(|(x, w)| Complex64::new(x * w, 0.0))
        .collect();
    buf.resize(nfft, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);

    let norm = 0.5 * fs * sum_w2;
    let half = nfft / 2;
    let df = fs / nfft as f64;
    Ok(EstimatedSpectrum {
        freqs: (0..=half).map(|k| k as f64 * df).collect(),
        density: buf[..=half].iter().map(|x| x.norm_sqr() / norm).collect(),
        window,
        norm,
        t_p: n as f64 / fs,
        dc_power: buf[0].norm_sqr() / (sum_w * sum_w),
    })
}

/// Pointwise mean of spectra sharing one grid and window, summed in order.
pub fn average_spectra(spectra: &[EstimatedSpectrum]) -> Result<EstimatedSpectrum> {
    let first = spectra
        .first()
        .ok_or_else(|| Error::GridMismatch("no spectra to average".into()))?;
    for (i, s) in spectra.iter().enumerate().skip(1) {
        if s.freqs.len() != first.freqs.len()
            || s.bin_width() != first.bin_width()
            || s.window != first.window
            || s.t_p != first.t_p
        {
            return Err(Error::GridMismatch(format!(
                "spectrum {i} differs from spectrum 0 in grid, window or duration"
            )));
        }
    }
    let r = spectra.len() as f64;
    let mut density = vec![0.0; first.density.len()];
    let mut dc_power = 0.0;
    for s in spectra {
        for (acc, d) in density.iter_mut().zip(&s.density) {
            *acc += d;
        }
        dc_power += s.dc_power;
    }
    density.iter_mut().for_each(|d| *d /= r);
    Ok(EstimatedSpectrum {
        density,
        dc_power: dc_power / r,
        ..first.clone()
    })
}

/// Periodograms are computed in parallel and averaged in input order.
pub fn average_periodograms(signals: &[LoadSignal], window: Window) -> Result<EstimatedSpectrum> {
    if let Some(first) = signals.first() {
        if let Some((i, _)) = signals
            .iter()
            .enumerate()
            .find(|(_, s)| s.sample_rate != first.sample_rate || s.len() != first.len())
        {
            return Err(Error::GridMismatch(format!(
                "signal {i} differs from signal 0 in sample rate or length"
            )));
        }
    }
    let spectra = signals
        .par_iter()
        .map(|s| periodogram(s, window))
        .collect::<Result<Vec<_>>>()?;
    average_spectra(&spectra)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandPower {
    /// kW².
    pub power: f64,
    /// `sqrt(2 power)`, the peak amplitude of an equivalent sinusoid, kW.
    pub amplitude: f64,
}

fn check_band(est: &EstimatedSpectrum, lo: f64, hi: f64) -> Result<()> {
    let nyq = est.nyquist();
    let tol = 1e-9 * nyq.max(1.0);
    if !(lo.is_finite() && hi.is_finite()) || lo < -tol || hi > nyq + tol || hi < lo {
        return Err(Error::BandOutsideGrid { lo, hi, nyquist: nyq });
    }
    Ok(())
}

/// Power in `[center - half_width, center + half_width]`.
pub fn band_power(est: &EstimatedSpectrum, center: f64, half_width: f64) -> Result<BandPower> {
    if half_width.is_nan() || half_width < 0.0 {
        return Err(Error::domain("half_width", half_width, "must be >= 0"));
    }
    let (lo, hi) = (center - half_width, center + half_width);
    check_band(est, lo, hi)?;
    let power = est.integrate(lo, hi);
    Ok(BandPower {
        power,
        amplitude: (2.0 * power).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandMoments {
    pub power: f64,
    pub centroid: f64,
    pub std: f64,
}

/// Power, power-weighted mean frequency and spread over `[lo, hi]`.
pub fn band_moments(est: &EstimatedSpectrum, lo: f64, hi: f64) -> Result<BandMoments> {
    check_band(est, lo, hi)?;
    let (mut p, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (f, mass) in est.cells(lo, hi) {
        p += mass;
        m1 += mass * f;
        m2 += mass * f * f;
    }
    if p <= 0.0 {
        return Ok(BandMoments {
            power: 0.0,
            centroid: 0.5 * (lo + hi),
            std: 0.0,
        });
    }
    let centroid = m1 / p;
    Ok(BandMoments {
        power: p,
        centroid,
        std: (m2 / p - centroid * centroid).max(0.0).sqrt(),
    })
}

/// `100 sqrt(P[guard, nyq] / P[0, guard))`. When `fundamental_hz` is known,
/// the guard must stay below half of it.
pub fn empirical_thc(est: &EstimatedSpectrum, guard_hz: f64, fundamental_hz: Option<f64>) -> Result<f64> {
    ensure_positive("guard_hz", guard_hz)?;
    if let Some(f0) = fundamental_hz {
        if guard_hz >= 0.5 * f0 {
            return Err(Error::domain("guard_hz", guard_hz, "must be below half the fundamental"));
        }
    }
    if guard_hz >= est.nyquist() {
        return Err(Error::BandOutsideGrid {
            lo: 0.0,
            hi: guard_hz,
            nyquist: est.nyquist(),
        });
    }
    let dc = est.integrate(0.0, guard_hz);
    if dc <= 0.0 {
        return Err(Error::UndefinedThc);
    }
    let harmonic = est.integrate(guard_hz, est.nyquist());
    Ok(100.0 * (harmonic / dc).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThcSeries {
    pub centers: Vec<f64>,
    pub thc: Vec<f64>,
    pub window_len: f64,
    pub overlap: f64,
}

impl ThcSeries {
    pub fn max(&self) -> Option<f64> {
        self.thc.iter().copied().reduce(f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t_center_s,thc_pct")?;
        for (t, v) in self.centers.iter().zip(&self.thc) {
            writeln!(out, "{},{}", sig9(*t), sig9(*v))?;
        }
        Ok(())
    }
}

/// THC of consecutive segments of `win` seconds advancing by
/// `win (1 - overlap)`.
pub fn sliding_thc(
    sig: &LoadSignal,
    win: f64,
    overlap: f64,
    guard_hz: f64,
    window: Window,
) -> Result<ThcSeries> {
    ensure_positive("win", win)?;
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::domain("overlap", overlap, "must lie in [0, 1)"));
    }
    let seg = (win * sig.sample_rate).round() as usize;
    if seg < 2 {
        return Err(Error::SignalTooShort(seg));
    }
    if seg > sig.len() {
        return Err(Error::domain("win", win, "exceeds the signal duration"));
    }
    let step = (((seg as f64) * (1.0 - overlap)).round() as usize).max(1);
    let starts: Vec<usize> = (0..=sig.len() - seg).step_by(step).collect();
    let thc = starts
        .par_iter()
        .map(|&s| empirical_thc(&periodogram(&sig.slice(s, seg), window)?, guard_hz, None))
        .collect::<Result<Vec<_>>>()?;
    let centers = starts
        .iter()
        .map(|&s| sig.t_start + (s as f64 + 0.5 * seg as f64) / sig.sample_rate)
        .collect();
    Ok(ThcSeries {
        centers,
        thc,
        window_len: seg as f64 / sig.sample_rate,
        overlap,
    })
}

/// Biased estimate `(1/n) Σ x_i x_{i+k}` of the raw (not mean-removed)
/// autocorrelation at lags `k / fs` up to `max_lag`.
pub fn empirical_autocorrelation(sig: &LoadSignal, max_lag: f64) -> Result<AutocorrSeries> {
    let n = sig.len();
    if n < 2 {
        return Err(Error::SignalTooShort(n));
    }
    if !(max_lag >= 0.0) || max_lag >= 0.5 * sig.duration() {
        return Err(Error::domain("max_lag", max_lag, "must lie in [0, duration / 2)"));
    }
    let k_max = (max_lag * sig.sample_rate).floor() as usize;
    let nfft = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex64> = sig.samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    buf.resize(nfft, Complex64::new(0.0, 0.0));
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(nfft).process(&mut buf);
    buf.iter_mut().for_each(|x| *x = Complex64::new(x.norm_sqr(), 0.0));
    planner.plan_fft_inverse(nfft).process(&mut buf);
    let scale = 1.0 / (nfft as f64 * n as f64);
    Ok(AutocorrSeries {
        lags: (0..=k_max).map(|k| k as f64 / sig.sample_rate).collect(),
        values: buf[..=k_max].iter().map(|x| x.re * scale).collect(),
    })
}
