//! Sampled realizations of the total roadway load.

use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::er_model::{
    controlled_power, periodic_overlap, roadway_overlap, ErConfig, EvParams,
};
use crate::error::{ensure_positive, Error, Result};
use crate::traffic::FleetRealization;

/// Default grid for INDOT-scale runs.
pub const DEFAULT_SAMPLE_RATE: f64 = 200.0;

/// Required ratio between the sample rate and the highest fundamental.
pub const OVERSAMPLING: f64 = 20.0;

pub(crate) const CHUNK: usize = 1024;

/// Uniformly sampled load in kW.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSignal {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    pub t_start: f64,
    /// Free-form provenance, e.g. scenario label and seed.
    pub meta: String,
}

impl LoadSignal {
    pub fn new(samples: Vec<f64>, sample_rate: f64, t_start: f64) -> Self {
        Self {
            samples,
            sample_rate,
            t_start,
            meta: String::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t_start + i as f64 / self.sample_rate
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len().max(1) as f64
    }

    pub fn mean_square(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len().max(1) as f64
    }

    /// Samples `[start, start + len)` as a new signal.
    pub fn slice(&self, start: usize, len: usize) -> LoadSignal {
        LoadSignal {
            samples: self.samples[start..start + len].to_vec(),
            sample_rate: self.sample_rate,
            t_start: self.time(start),
            meta: self.meta.clone(),
        }
    }

    /// Writes `t_s,p_kw` rows with 9 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t_s,p_kw")?;
        for (i, p) in self.samples.iter().enumerate() {
            writeln!(out, "{},{}", sig9(self.time(i)), sig9(*p))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R, path: &Path) -> Result<Self> {
        let rows = read_numeric_csv(input, path, &["t_s", "p_kw"])?;
        if rows.len() < 2 {
            return Err(Error::SignalTooShort(rows.len()));
        }
        let t0 = rows[0][0];
        let span = rows[rows.len() - 1][0] - t0;
        let mut rate = (rows.len() - 1) as f64 / span;
        if (rate - rate.round()).abs() < 1e-6 * rate {
            rate = rate.round();
        }
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::Csv {
                path: path.to_path_buf(),
                line: 2,
                msg: "time column is not increasing".into(),
            });
        }
        Ok(LoadSignal::new(rows.iter().map(|r| r[1]).collect(), rate, t0))
    }
}

/// How EVs are placed relative to the finite roadway.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EdgeMode {
    /// Every EV rides an infinite coil train for the whole window.
    #[default]
    Periodic,
    /// EVs traverse the K-coil roadway and may enter or leave mid-window.
    Finite,
}

/// Rejects sample rates below 20x the highest fundamental.
pub fn check_sample_rate(er: &ErConfig, max_speed: f64, sample_rate: f64) -> Result<()> {
    let fundamental = max_speed / er.seg_len();
    let required = OVERSAMPLING * fundamental;
    if sample_rate < required {
        return Err(Error::Aliasing {
            sample_rate,
            required,
            fundamental,
        });
    }
    Ok(())
}

/// Entry time used in finite mode when an EV does not carry one: EV `n` of
/// `N` starts `floor(n K / N)` coil segments down the road, aligned with its
/// timing.
pub fn default_entry_time(ev: &EvParams, er: &ErConfig, index: usize, fleet_len: usize) -> f64 {
    let k = (index * er.n_segments()) / fleet_len.max(1);
    ev.timing - k as f64 * ev.period(er)
}

/// Total load of `fleet`, sampled at `sample_rate` over `[0, duration)`.
pub fn synthesize_total_load(
    fleet: &FleetRealization,
    er: &ErConfig,
    duration: f64,
    sample_rate: f64,
    edge_mode: EdgeMode,
) -> Result<LoadSignal> {
    ensure_positive("duration", duration)?;
    ensure_positive("sample_rate", sample_rate)?;
    let max_speed = fleet.evs.iter().map(|e| e.speed).fold(0.0, f64::max);
    if max_speed > 0.0 {
        check_sample_rate(er, max_speed, sample_rate)?;
    }
    synthesize_unchecked(fleet, er, duration, sample_rate, edge_mode)
}

/// As [`synthesize_total_load`] without the aliasing guard.
pub fn synthesize_unchecked(
    fleet: &FleetRealization,
    er: &ErConfig,
    duration: f64,
    sample_rate: f64,
    edge_mode: EdgeMode,
) -> Result<LoadSignal> {
    ensure_positive("duration", duration)?;
    ensure_positive("sample_rate", sample_rate)?;
    let n = (duration * sample_rate).round() as usize;
    let dt = 1.0 / sample_rate;
    let seg = er.seg_len();
    let tx = er.tx_len();
    let fleet_len = fleet.len();
    let entries: Vec<f64> = fleet
        .evs
        .iter()
        .enumerate()
        .map(|(i, ev)| {
            ev.entry_time
                .unwrap_or_else(|| default_entry_time(ev, er, i, fleet_len))
        })
        .collect();

    let mut samples = vec![0.0; n];
    // Chunks are independent and each sums EVs in index order, so the result
    // does not depend on the thread count.
    samples
        .par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            let first = c * CHUNK;
            for (ev, entry) in fleet.evs.iter().zip(&entries) {
                match edge_mode {
                    EdgeMode::Periodic => {
                        let shift = 0.5 * (ev.rx_len + tx) - ev.speed * ev.timing;
                        for (j, out) in chunk.iter_mut().enumerate() {
                            let t = (first + j) as f64 * dt;
                            let x = ev.speed * t + shift;
                            *out += controlled_power(ev, er, periodic_overlap(seg, tx, ev.rx_len, x));
                        }
                    }
                    EdgeMode::Finite => {
                        for (j, out) in chunk.iter_mut().enumerate() {
                            let t = (first + j) as f64 * dt;
                            if t < *entry {
                                continue;
                            }
                            let x = ev.speed * (t - entry);
                            *out += controlled_power(ev, er, roadway_overlap(er, ev.rx_len, x));
                        }
                    }
                }
            }
        });

    let mut signal = LoadSignal::new(samples, sample_rate, 0.0);
    signal.meta = format!("{} seed={} n={}", fleet.scenario, fleet.seed, fleet_len);
    Ok(signal)
}

/// Unit-density pulse train of one EV at `speed`, even about `t = 0`.
pub fn ideal_pulse_train(
    er: &ErConfig,
    rx_len: f64,
    speed: f64,
    duration: f64,
    sample_rate: f64,
) -> Result<LoadSignal> {
    ensure_positive("speed", speed)?;
    ensure_positive("rx_len", rx_len)?;
    ensure_positive("duration", duration)?;
    ensure_positive("sample_rate", sample_rate)?;
    check_sample_rate(er, speed, sample_rate)?;
    let n = (duration * sample_rate).round() as usize;
    let shift = 0.5 * (rx_len + er.tx_len());
    let samples = (0..n)
        .map(|i| {
            let x = speed * i as f64 / sample_rate + shift;
            periodic_overlap(er.seg_len(), er.tx_len(), rx_len, x)
        })
        .collect();
    let mut signal = LoadSignal::new(samples, sample_rate, 0.0);
    signal.meta = format!("pulse_train v={speed}");
    Ok(signal)
}

/// Formats with 9 significant digits.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{x:.8e}")
}

/// Reads a CSV of floats with the exact `header`.
pub(crate) fn read_numeric_csv<R: BufRead>(
    input: R,
    path: &Path,
    header: &[&str],
) -> Result<Vec<Vec<f64>>> {
    let csv_err = |line: usize, msg: String| Error::Csv {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = input.lines();
    let first = lines
        .next()
        .ok_or_else(|| csv_err(1, "empty file".into()))?
        .map_err(|e| Error::io(path, e))?;
    let expected = header.join(",");
    if first.trim() != expected {
        return Err(csv_err(1, format!("expected header `{expected}`, found `{first}`")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| csv_err(i + 2, e.to_string()))?;
        if row.len() != header.len() {
            return Err(csv_err(i + 2, format!("expected {} fields", header.len())));
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::er_model::{ControlMode, INDOT_RX_LEN};
    use crate::harmonics::fourier_coefficient;
    use crate::traffic::{sample_fleet, FleetSize, ScenarioKind, ScenarioSpec};
    use proptest::prelude::*;

    const V: f64 = 24.56;

    fn er() -> ErConfig {
        ErConfig::indot(16_093.44).unwrap()
    }

    fn spec(kind: ScenarioKind, n: usize, std: f64, seed: u64) -> ScenarioSpec {
        ScenarioSpec {
            kind,
            fleet_size: FleetSize::Fixed(n),
            density_mean: 94.45,
            density_std: std,
            speed: V,
            rx_len: INDOT_RX_LEN,
            control: ControlMode::Multiplicative,
            seed,
        }
    }

    #[test]
    fn s1_equals_scaled_pulse_train() {
        let e = er();
        let fleet = sample_fleet(&spec(ScenarioKind::Synchronized, 20, 0.0, 2), &e).unwrap();
        let sig = synthesize_total_load(&fleet, &e, 2.0, 200.0, EdgeMode::Periodic).unwrap();
        let t0 = fleet.evs[0].timing;
        let shift = 0.5 * (INDOT_RX_LEN + e.tx_len());
        for (i, p) in sig.samples.iter().enumerate() {
            let x = V * (i as f64 / 200.0 - t0) + shift;
            let h = periodic_overlap(e.seg_len(), e.tx_len(), INDOT_RX_LEN, x);
            assert!((p - 20.0 * 94.45 * h).abs() < 1e-9 * p.max(1.0));
        }
    }

    #[test]
    fn empty_fleet_gives_zeros() {
        let sig = synthesize_total_load(
            &FleetRealization::from_evs(vec![]),
            &er(),
            1.0,
            200.0,
            EdgeMode::Periodic,
        )
        .unwrap();
        assert_eq!(sig.len(), 200);
        assert!(sig.samples.iter().all(|p| *p == 0.0));
    }

    #[test]
    fn rejects_aliasing_rates() {
        let e = er();
        let fleet = sample_fleet(&spec(ScenarioKind::Independent, 5, 0.0, 1), &e).unwrap();
        assert!(matches!(
            synthesize_total_load(&fleet, &e, 1.0, 50.0, EdgeMode::Periodic),
            Err(Error::Aliasing { .. })
        ));
        assert!(synthesize_unchecked(&fleet, &e, 1.0, 50.0, EdgeMode::Periodic).is_ok());
    }

    #[test]
    fn pulse_train_mean_and_peak() {
        let e = er();
        let period = e.seg_len() / V;
        let rate = 2000.0;
        let sig = ideal_pulse_train(&e, INDOT_RX_LEN, V, 1.0, rate).unwrap();
        // Average over exactly 50 periods by quadrature on a fine grid.
        let n = 1_000_000;
        let span = 50.0 * period;
        let shift = 0.5 * (INDOT_RX_LEN + e.tx_len());
        let mean: f64 = (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) * span / n as f64;
                periodic_overlap(e.seg_len(), e.tx_len(), INDOT_RX_LEN, V * t + shift)
            })
            .sum::<f64>()
            / n as f64;
        let c0 = fourier_coefficient(&e, INDOT_RX_LEN, 0);
        assert!((mean - c0).abs() < 1e-6 * c0, "{mean} vs {c0}");
        let peak = sig.samples.iter().cloned().fold(0.0, f64::max);
        assert!((peak - 1.8).abs() < 1e-12);
        // Even about t = 0: the first sample sits on the plateau.
        assert!((sig.samples[0] - 1.8).abs() < 1e-12);
    }

    #[test]
    fn pulse_train_autocorrelation_peaks_at_period() {
        let e = er();
        let rate = 2000.0;
        let sig = ideal_pulse_train(&e, INDOT_RX_LEN, V, 4.0, rate).unwrap();
        let mean = sig.mean();
        let x: Vec<f64> = sig.samples.iter().map(|v| v - mean).collect();
        let corr = |k: usize| -> f64 {
            x.iter().zip(&x[k..]).map(|(a, b)| a * b).sum::<f64>()
        };
        let lo = (0.1 * rate) as usize;
        let hi = (0.27 * rate) as usize;
        let best = (lo..hi).max_by(|a, b| corr(*a).total_cmp(&corr(*b))).unwrap();
        let lag = best as f64 / rate;
        assert!((lag - 0.186).abs() < 1e-3, "{lag}");
    }

    #[test]
    fn s2_mean_approaches_closed_form() {
        let e = er();
        let fleet = sample_fleet(&spec(ScenarioKind::Independent, 192, 5.55, 31), &e).unwrap();
        let sig = synthesize_total_load(&fleet, &e, 600.0, 200.0, EdgeMode::Periodic).unwrap();
        let c0 = fourier_coefficient(&e, INDOT_RX_LEN, 0);
        let expected = 192.0 * 94.45 * c0;
        assert!((sig.mean() - expected).abs() < 0.01 * expected);
        assert!((sig.mean() / 1000.0 - 26.13).abs() < 0.03 * 26.13);
    }

    #[test]
    fn finite_mode_edges() {
        let e = ErConfig::indot(400.0).unwrap();
        let ev = EvParams::multiplicative(&e, INDOT_RX_LEN, 100.0, 0.0, 20.0)
            .unwrap()
            .with_entry_time(1.0);
        let fleet = FleetRealization::from_evs(vec![ev]);
        let sig = synthesize_total_load(&fleet, &e, 30.0, 200.0, EdgeMode::Finite).unwrap();
        assert!(sig.samples[..200].iter().all(|p| *p == 0.0));
        assert!(sig.samples[400] > 0.0);
        // Leaves the 400 m road after about 21 s.
        assert!(sig.samples[(23.0 * 200.0) as usize..].iter().all(|p| *p == 0.0));
    }

    #[test]
    fn clipped_sandwiched_between_scaled_waveforms() {
        let e = er();
        let peak = 0.75 * e.rated_density();
        let mut s = spec(ScenarioKind::Independent, 10, 0.0, 6);
        s.control = ControlMode::Clipped { peak_density: peak };
        let clipped = sample_fleet(&s, &e).unwrap();
        let with_density = |d: f64| {
            let evs = clipped
                .evs
                .iter()
                .map(|ev| EvParams {
                    density: d,
                    control: ControlMode::Multiplicative,
                    ..*ev
                })
                .collect();
            FleetRealization::from_evs(evs)
        };
        let c = synthesize_total_load(&clipped, &e, 2.0, 200.0, EdgeMode::Periodic).unwrap();
        let low = synthesize_total_load(&with_density(peak), &e, 2.0, 200.0, EdgeMode::Periodic).unwrap();
        let high =
            synthesize_total_load(&with_density(e.rated_density()), &e, 2.0, 200.0, EdgeMode::Periodic).unwrap();
        for i in 0..c.len() {
            assert!(low.samples[i] <= c.samples[i] + 1e-9);
            assert!(c.samples[i] <= high.samples[i] + 1e-9);
        }
    }

    #[test]
    fn csv_round_trip() {
        let sig = LoadSignal::new(vec![0.0, 1.5, 26130.123456789, 3.0], 200.0, 0.0);
        let mut buf = Vec::new();
        sig.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t_s,p_kw\n0,0\n"));
        let back = LoadSignal::read_csv(&buf[..], Path::new("mem")).unwrap();
        assert_eq!(back.sample_rate, 200.0);
        for (a, b) in sig.samples.iter().zip(&back.samples) {
            assert!((a - b).abs() <= 1e-8 * a.abs());
        }
        assert!(LoadSignal::read_csv(&b"t,p\n0,1\n"[..], Path::new("mem")).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn synthesis_is_linear(seed_a in 0u64..1000, seed_b in 0u64..1000, finite in any::<bool>()) {
            let e = er();
            let mode = if finite { EdgeMode::Finite } else { EdgeMode::Periodic };
            let a = sample_fleet(&spec(ScenarioKind::Independent, 7, 5.55, seed_a), &e).unwrap();
            let b = sample_fleet(&spec(ScenarioKind::GaussianSpeeds { speed_std: 1.0 }, 5, 5.55, seed_b), &e).unwrap();
            // Entry times pinned so both placements see the same EVs.
            let pin = |f: &FleetRealization, off: usize, total: usize| {
                let evs = f.evs.iter().enumerate()
                    .map(|(i, ev)| ev.with_entry_time(default_entry_time(ev, &e, i + off, total)))
                    .collect();
                FleetRealization::from_evs(evs)
            };
            let (a, b) = (pin(&a, 0, 12), pin(&b, 7, 12));
            let sa = synthesize_total_load(&a, &e, 1.0, 200.0, mode).unwrap();
            let sb = synthesize_total_load(&b, &e, 1.0, 200.0, mode).unwrap();
            let sab = synthesize_total_load(&a.union(&b), &e, 1.0, 200.0, mode).unwrap();
            for i in 0..sab.len() {
                prop_assert!((sab.samples[i] - sa.samples[i] - sb.samples[i]).abs() < 1e-9 * sab.samples[i].max(1.0));
            }
        }
    }
}
