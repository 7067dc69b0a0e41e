//! Fleet samplers for the four traffic scenarios.
//!
//! * S1: one common timing for every EV.
//! * S2: independent timings, uniform over the fundamental period.
//! * S3: platoons of `q` EVs sharing a timing, plus optional per-EV jitter.
//! * S4: independent Gaussian speeds, each EV uniform over its own period.
//!
//! Densities are Gaussian in every scenario, resampled into `(0, rated]`.
//!
//! Every EV draws from its own substream, in the order density, speed,
//! timing. Platoon timings come from the platoon leader's stream and the S1
//! timing from EV 0's stream, so the degenerate cases coincide draw-for-draw:
//! S3 with `q = 1` and no jitter is S2, S3 with `q = N` and no jitter is S1,
//! and S4 with zero speed spread is S2.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::er_model::{ControlMode, ErConfig, EvParams};
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::rng::Substreams;

const MAX_REJECTIONS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioKind {
    Synchronized,
    Independent,
    Platoons { q: usize, intra_jitter: f64 },
    GaussianSpeeds { speed_std: f64 },
}

impl ScenarioKind {
    pub fn label(&self) -> &'static str {
        match self {
            ScenarioKind::Synchronized => "s1",
            ScenarioKind::Independent => "s2",
            ScenarioKind::Platoons { .. } => "s3",
            ScenarioKind::GaussianSpeeds { .. } => "s4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FleetSize {
    Fixed(usize),
    /// Poisson with mean `arrival_rate * total_len / speed`.
    Poisson { arrival_rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub fleet_size: FleetSize,
    pub density_mean: f64,
    pub density_std: f64,
    /// Common speed (S1–S3) or mean speed (S4), m/s.
    pub speed: f64,
    pub rx_len: f64,
    pub control: ControlMode,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self, er: &ErConfig) -> Result<()> {
        ensure_positive("density_mean", self.density_mean)?;
        ensure_non_negative("density_std", self.density_std)?;
        ensure_positive("speed", self.speed)?;
        ensure_positive("rx_len", self.rx_len)?;
        if self.density_mean > er.rated_density() {
            return Err(Error::domain(
                "density_mean",
                self.density_mean,
                "exceeds the rated density of the roadway",
            ));
        }
        match self.fleet_size {
            FleetSize::Fixed(0) => {
                return Err(Error::domain("n_evs", 0.0, "must be >= 1"));
            }
            FleetSize::Fixed(_) => {}
            FleetSize::Poisson { arrival_rate } => {
                ensure_non_negative("arrival_rate", arrival_rate)?;
            }
        }
        match self.kind {
            ScenarioKind::Platoons { q, intra_jitter } => {
                if q == 0 {
                    return Err(Error::domain("q", 0.0, "must be >= 1"));
                }
                ensure_non_negative("intra_jitter", intra_jitter)?;
            }
            ScenarioKind::GaussianSpeeds { speed_std } => {
                ensure_non_negative("speed_std", speed_std)?;
            }
            _ => {}
        }
        Ok(())
    }
}

/// One sampled fleet.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FleetRealization {
    pub evs: Vec<EvParams>,
    /// Platoon index of each EV (S3 only).
    pub platoon: Vec<Option<usize>>,
    pub scenario: &'static str,
    pub seed: u64,
}

impl FleetRealization {
    pub fn len(&self) -> usize {
        self.evs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.evs.is_empty()
    }

    /// Fleet with no platoon structure, e.g. hand-built for tests.
    pub fn from_evs(evs: Vec<EvParams>) -> Self {
        let platoon = vec![None; evs.len()];
        Self {
            evs,
            platoon,
            scenario: "custom",
            seed: 0,
        }
    }

    /// Concatenation of two fleets.
    pub fn union(&self, other: &Self) -> Self {
        let mut evs = self.evs.clone();
        evs.extend_from_slice(&other.evs);
        let mut platoon = self.platoon.clone();
        platoon.extend_from_slice(&other.platoon);
        Self {
            evs,
            platoon,
            scenario: "custom",
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoissonFleetSize {
    /// Mean number of EVs on the segment.
    pub mean: f64,
    /// One Poisson draw.
    pub sample: usize,
    /// The mean rounded to the nearest integer.
    pub deterministic: usize,
}

/// Number of EVs on a segment of length `total_len` when arrivals at rate
/// `arrival_rate` travel at `speed`.
pub fn poisson_fleet_size(
    arrival_rate: f64,
    total_len: f64,
    speed: f64,
    seed: u64,
) -> Result<PoissonFleetSize> {
    ensure_non_negative("arrival_rate", arrival_rate)?;
    ensure_positive("total_len", total_len)?;
    ensure_positive("speed", speed)?;
    let mean = arrival_rate * total_len / speed;
    let sample = if mean == 0.0 {
        0
    } else {
        let dist = Poisson::new(mean).map_err(|_| Error::domain("mean", mean, "invalid Poisson mean"))?;
        dist.sample(&mut Substreams::new(seed).fleet()) as usize
    };
    Ok(PoissonFleetSize {
        mean,
        sample,
        deterministic: mean.round() as usize,
    })
}

/// Gaussian draw resampled until it falls in `(lo, hi]`.
pub(crate) fn truncated_normal(
    rng: &mut ChaCha8Rng,
    name: &'static str,
    mean: f64,
    std: f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    if std == 0.0 {
        return if mean > lo && mean <= hi {
            Ok(mean)
        } else {
            Err(Error::domain(name, mean, "outside the admissible range"))
        };
    }
    let normal = Normal::new(mean, std).map_err(|_| Error::domain(name, std, "invalid std"))?;
    for _ in 0..MAX_REJECTIONS {
        let x = normal.sample(rng);
        if x > lo && x <= hi {
            return Ok(x);
        }
    }
    Err(Error::domain(
        name,
        mean,
        "truncation range holds almost no probability mass",
    ))
}

/// Samples one fleet realization.
pub fn sample_fleet(spec: &ScenarioSpec, er: &ErConfig) -> Result<FleetRealization> {
    spec.validate(er)?;
    let n = match spec.fleet_size {
        FleetSize::Fixed(n) => n,
        FleetSize::Poisson { arrival_rate } => {
            poisson_fleet_size(arrival_rate, er.total_len(), spec.speed, spec.seed)?.sample
        }
    };
    let streams = Substreams::new(spec.seed);
    let seg = er.seg_len();
    let common_period = seg / spec.speed;

    let mut rngs: Vec<ChaCha8Rng> = (0..n).map(|i| streams.ev(i)).collect();
    let mut densities = Vec::with_capacity(n);
    let mut speeds = Vec::with_capacity(n);
    for rng in rngs.iter_mut() {
        densities.push(truncated_normal(
            rng,
            "density",
            spec.density_mean,
            spec.density_std,
            0.0,
            er.rated_density(),
        )?);
        let v = match spec.kind {
            ScenarioKind::GaussianSpeeds { speed_std } => {
                truncated_normal(rng, "speed", spec.speed, speed_std, 0.0, f64::INFINITY)?
            }
            _ => spec.speed,
        };
        speeds.push(v);
    }

    let mut platoon = vec![None; n];
    let timings: Vec<f64> = match spec.kind {
        ScenarioKind::Synchronized => {
            let t0 = match rngs.first_mut() {
                Some(rng) => rng.random_range(0.0..common_period),
                None => 0.0,
            };
            vec![t0; n]
        }
        ScenarioKind::Independent => rngs
            .iter_mut()
            .map(|rng| rng.random_range(0.0..common_period))
            .collect(),
        ScenarioKind::Platoons { q, intra_jitter } => {
            if q > n {
                return Err(Error::PlatoonTooLarge { q, n });
            }
            let mut timings = vec![0.0; n];
            for (p, start) in (0..n).step_by(q).enumerate() {
                let end = (start + q).min(n);
                let base = rngs[start].random_range(0.0..common_period);
                for i in start..end {
                    let jitter = if intra_jitter > 0.0 {
                        rngs[i].random_range(0.0..intra_jitter)
                    } else {
                        0.0
                    };
                    timings[i] = wrap(base + jitter, common_period);
                    platoon[i] = Some(p);
                }
            }
            timings
        }
        ScenarioKind::GaussianSpeeds { .. } => rngs
            .iter_mut()
            .zip(&speeds)
            .map(|(rng, v)| rng.random_range(0.0..seg / v))
            .collect(),
    };

    let evs = (0..n)
        .map(|i| EvParams {
            rx_len: spec.rx_len,
            density: densities[i],
            timing: timings[i],
            speed: speeds[i],
            control: spec.control,
            entry_time: None,
        })
        .collect();
    Ok(FleetRealization {
        evs,
        platoon,
        scenario: spec.kind.label(),
        seed: spec.seed,
    })
}

/// `x mod period`, guaranteed to land in `[0, period)`.
fn wrap(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    if r >= period {
        0.0
    } else {
        r
    }
}
