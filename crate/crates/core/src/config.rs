//! Experiment configuration files.
//!
//! TOML with a required top-level `profile` (`"indot"` or `"custom"`) and
//! optional `[roadway]`, `[ev]`, `[scenario]`, `[run]` and `[microsim]`
//! tables. Lengths and speeds are SI by default; a length key ending in
//! `_mi` or a speed key ending in `_mph` may be given instead of its
//! `_m` / `_mps` twin, never both. Unknown keys are rejected.
//!
//! A resolved [`Config`] converts back into a fully explicit `custom`
//! [`RawConfig`] in SI units, which is what run manifests store.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::er_model::{
    ControlMode, ErConfig, INDOT_GAP, INDOT_RATED_DENSITY, INDOT_RX_LEN, INDOT_TX_LEN,
};
use crate::error::{Error, Result};
use crate::microsim::{SimConfig, TruncatedGaussian, Zone};
use crate::signal::{EdgeMode, DEFAULT_SAMPLE_RATE};
use crate::spectral::{Window, DEFAULT_GUARD_HZ};
use crate::traffic::{FleetSize, ScenarioKind, ScenarioSpec};

pub const MPH: f64 = 0.44704;
pub const MILE: f64 = 1609.344;

pub const DEFAULT_TOTAL_LEN: f64 = 10.0 * MILE;
pub const DEFAULT_DENSITY_MEAN: f64 = 94.45;
pub const DEFAULT_DENSITY_STD: f64 = 5.55;
pub const DEFAULT_SPEED: f64 = 24.56;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Indot,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub profile: Option<Profile>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub roadway: RawRoadway,
    #[serde(default, skip_serializing_if = "is_default")]
    pub ev: RawEv,
    #[serde(default, skip_serializing_if = "is_default")]
    pub scenario: RawScenario,
    #[serde(default, skip_serializing_if = "is_default")]
    pub run: RawRun,
    #[serde(default, skip_serializing_if = "is_default")]
    pub microsim: RawMicrosim,
}

fn is_default<T: Default + PartialEq>(x: &T) -> bool {
    *x == T::default()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRoadway {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tx_len_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_len_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_len_mi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rated_density_kw_per_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEv {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rx_len_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density_mean_kw_per_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density_std_kw_per_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speed_mps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speed_mph: Option<f64>,
    /// `"multiplicative"` or `"clipped"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_density_kw_per_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenario {
    /// `"s1"` to `"s4"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_evs: Option<usize>,
    /// Poisson fleet size instead of `n_evs`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arrival_rate_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intra_jitter_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speed_std_mps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speed_std_mph: Option<f64>,
    /// `"periodic"` or `"finite"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge_mode: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRun {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guard_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_lag_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thc_window_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thc_overlap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMicrosim {
    /// `"free_flow"` or `"congestion"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jam_speed_mps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jam_speed_mph: Option<f64>,
    /// Explicit zones replace the preset's.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zones: Option<Vec<Zone>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub road_len_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub road_len_mi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arrival_rate_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub desired_speed: Option<TruncatedGaussian>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_max_mps2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_decel_mps2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_gap_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reaction_time_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_speed_mps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub imperfection: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vehicle_len_m: Option<f64>,
    /// Simulated time, s.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sim_duration_s: Option<f64>,
    /// Load and THC are evaluated after this time, s.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warmup_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSettings {
    pub seed: u64,
    pub runs: usize,
    pub duration: f64,
    pub rate: f64,
    pub window: Window,
    pub guard_hz: f64,
    pub max_lag: f64,
    pub thc_window: f64,
    pub thc_overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MicrosimSettings {
    pub preset: String,
    pub sim: SimConfig,
    pub duration: f64,
    pub warmup: f64,
}

/// Fully resolved experiment description, SI units throughout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub er: ErConfig,
    pub rx_len: f64,
    pub density_mean: f64,
    pub density_std: f64,
    pub speed: f64,
    pub control: ControlMode,
    pub kind: ScenarioKind,
    pub fleet_size: FleetSize,
    pub edge_mode: EdgeMode,
    pub run: RunSettings,
    pub microsim: MicrosimSettings,
}

impl Config {
    pub fn indot() -> Self {
        resolve(&RawConfig {
            profile: Some(Profile::Indot),
            ..RawConfig::default()
        })
        .expect("the built-in profile is valid")
    }

    /// Scenario sampled for Monte-Carlo run `seed`.
    pub fn scenario_spec(&self, seed: u64) -> ScenarioSpec {
        ScenarioSpec {
            kind: self.kind,
            fleet_size: self.fleet_size,
            density_mean: self.density_mean,
            density_std: self.density_std,
            speed: self.speed,
            rx_len: self.rx_len,
            control: self.control,
            seed,
        }
    }

    /// Explicit `custom` description that resolves back to `self`.
    pub fn to_raw(&self) -> RawConfig {
        let (kind, q, jitter, speed_std) = match self.kind {
            ScenarioKind::Synchronized => ("s1", None, None, None),
            ScenarioKind::Independent => ("s2", None, None, None),
            ScenarioKind::Platoons { q, intra_jitter } => ("s3", Some(q), Some(intra_jitter), None),
            ScenarioKind::GaussianSpeeds { speed_std } => ("s4", None, None, Some(speed_std)),
        };
        let (n_evs, arrival) = match self.fleet_size {
            FleetSize::Fixed(n) => (Some(n), None),
            FleetSize::Poisson { arrival_rate } => (None, Some(arrival_rate)),
        };
        let (control, peak) = match self.control {
            ControlMode::Multiplicative => ("multiplicative", None),
            ControlMode::Clipped { peak_density } => ("clipped", Some(peak_density)),
        };
        let sim = &self.microsim.sim;
        RawConfig {
            profile: Some(Profile::Custom),
            roadway: RawRoadway {
                tx_len_m: Some(self.er.tx_len()),
                gap_m: Some(self.er.gap()),
                total_len_m: Some(self.er.total_len()),
                total_len_mi: None,
                rated_density_kw_per_m: Some(self.er.rated_density()),
            },
            ev: RawEv {
                rx_len_m: Some(self.rx_len),
                density_mean_kw_per_m: Some(self.density_mean),
                density_std_kw_per_m: Some(self.density_std),
                speed_mps: Some(self.speed),
                speed_mph: None,
                control: Some(control.into()),
                peak_density_kw_per_m: peak,
            },
            scenario: RawScenario {
                kind: Some(kind.into()),
                n_evs,
                arrival_rate_per_s: arrival,
                q,
                intra_jitter_s: jitter,
                speed_std_mps: speed_std,
                speed_std_mph: None,
                edge_mode: Some(
                    match self.edge_mode {
                        EdgeMode::Periodic => "periodic",
                        EdgeMode::Finite => "finite",
                    }
                    .into(),
                ),
            },
            run: RawRun {
                seed: Some(self.run.seed),
                runs: Some(self.run.runs),
                duration_s: Some(self.run.duration),
                rate_hz: Some(self.run.rate),
                window: Some(self.run.window.to_string()),
                guard_hz: Some(self.run.guard_hz),
                max_lag_s: Some(self.run.max_lag),
                thc_window_s: Some(self.run.thc_window),
                thc_overlap: Some(self.run.thc_overlap),
            },
            microsim: RawMicrosim {
                preset: Some(self.microsim.preset.clone()),
                jam_speed_mps: None,
                jam_speed_mph: None,
                zones: Some(sim.zones.clone()),
                road_len_m: Some(sim.road_len),
                road_len_mi: None,
                arrival_rate_per_s: Some(sim.arrival_rate),
                desired_speed: Some(sim.desired_speed),
                a_max_mps2: Some(sim.a_max),
                b_decel_mps2: Some(sim.b_decel),
                min_gap_m: Some(sim.min_gap),
                reaction_time_s: Some(sim.reaction_time),
                dt_s: Some(sim.dt),
                max_speed_mps: Some(sim.max_speed),
                imperfection: Some(sim.imperfection),
                vehicle_len_m: Some(sim.vehicle_len),
                sim_duration_s: Some(self.microsim.duration),
                warmup_s: Some(self.microsim.warmup),
            },
        }
    }
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::config(field, msg.to_string())
}

/// Picks one of an SI key and its imperial twin.
fn either(
    si: Option<f64>,
    si_name: &str,
    imperial: Option<f64>,
    imperial_name: &str,
    factor: f64,
) -> Result<Option<f64>> {
    match (si, imperial) {
        (Some(_), Some(_)) => Err(field_err(
            si_name,
            format!("give either `{si_name}` or `{imperial_name}`, not both"),
        )),
        (Some(v), None) => Ok(Some(v)),
        (None, Some(v)) => Ok(Some(v * factor)),
        (None, None) => Ok(None),
    }
}

fn require(value: Option<f64>, field: &str, profile_default: Option<f64>) -> Result<f64> {
    value
        .or(profile_default)
        .ok_or_else(|| field_err(field, "required by the custom profile"))
}

fn check(field: &str, value: f64, ok: bool, expect: &str) -> Result<f64> {
    if value.is_finite() && ok {
        Ok(value)
    } else {
        Err(field_err(field, format!("{value} is invalid: must be {expect}")))
    }
}

fn positive(field: &str, value: f64) -> Result<f64> {
    check(field, value, value > 0.0, "> 0")
}

fn non_negative(field: &str, value: f64) -> Result<f64> {
    check(field, value, value >= 0.0, ">= 0")
}

pub fn parse_config_str(text: &str, origin: &str) -> Result<Config> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| field_err(origin, e.to_string().trim_end()))?;
    resolve(&raw)
}

pub fn parse_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, &path.display().to_string())
}

pub fn resolve(raw: &RawConfig) -> Result<Config> {
    let profile = raw
        .profile
        .ok_or_else(|| field_err("profile", "missing; expected \"indot\" or \"custom\""))?;
    let indot = profile == Profile::Indot;
    let dflt = |v: f64| indot.then_some(v);

    let r = &raw.roadway;
    let tx_len = positive("roadway.tx_len_m", require(r.tx_len_m, "roadway.tx_len_m", dflt(INDOT_TX_LEN))?)?;
    let gap = non_negative("roadway.gap_m", require(r.gap_m, "roadway.gap_m", dflt(INDOT_GAP))?)?;
    let total_len = either(r.total_len_m, "roadway.total_len_m", r.total_len_mi, "roadway.total_len_mi", MILE)?
        .unwrap_or(DEFAULT_TOTAL_LEN);
    let total_len = positive("roadway.total_len_m", total_len)?;
    let rated = positive(
        "roadway.rated_density_kw_per_m",
        require(r.rated_density_kw_per_m, "roadway.rated_density_kw_per_m", dflt(INDOT_RATED_DENSITY))?,
    )?;
    let er = ErConfig::new(tx_len, gap, total_len, rated).map_err(|e| field_err("roadway", e))?;

    let e = &raw.ev;
    let rx_len = positive("ev.rx_len_m", require(e.rx_len_m, "ev.rx_len_m", dflt(INDOT_RX_LEN))?)?;
    let density_mean = e.density_mean_kw_per_m.unwrap_or(DEFAULT_DENSITY_MEAN);
    check(
        "ev.density_mean_kw_per_m",
        density_mean,
        density_mean > 0.0 && density_mean <= rated,
        "in (0, rated density]",
    )?;
    let density_std = non_negative("ev.density_std_kw_per_m", e.density_std_kw_per_m.unwrap_or(DEFAULT_DENSITY_STD))?;
    let speed = either(e.speed_mps, "ev.speed_mps", e.speed_mph, "ev.speed_mph", MPH)?.unwrap_or(DEFAULT_SPEED);
    let speed = positive("ev.speed_mps", speed)?;
    let control = match e.control.as_deref().unwrap_or("multiplicative") {
        "multiplicative" => {
            if e.peak_density_kw_per_m.is_some() {
                return Err(field_err("ev.peak_density_kw_per_m", "only valid with control = \"clipped\""));
            }
            ControlMode::Multiplicative
        }
        "clipped" => {
            let peak = e
                .peak_density_kw_per_m
                .ok_or_else(|| field_err("ev.peak_density_kw_per_m", "required with control = \"clipped\""))?;
            check("ev.peak_density_kw_per_m", peak, peak > 0.0 && peak <= rated, "in (0, rated density]")?;
            ControlMode::Clipped { peak_density: peak }
        }
        other => {
            return Err(field_err(
                "ev.control",
                format!("unknown mode `{other}` (expected multiplicative or clipped)"),
            ))
        }
    };

    let s = &raw.scenario;
    let speed_std = either(s.speed_std_mps, "scenario.speed_std_mps", s.speed_std_mph, "scenario.speed_std_mph", MPH)?;
    let kind_name = s.kind.as_deref().unwrap_or("s2");
    let kind = match kind_name {
        "s1" => ScenarioKind::Synchronized,
        "s2" => ScenarioKind::Independent,
        "s3" => {
            let q = s.q.unwrap_or(1);
            if q == 0 {
                return Err(field_err("scenario.q", "must be >= 1"));
            }
            let jitter = non_negative("scenario.intra_jitter_s", s.intra_jitter_s.unwrap_or(0.0))?;
            ScenarioKind::Platoons { q, intra_jitter: jitter }
        }
        "s4" => ScenarioKind::GaussianSpeeds {
            speed_std: non_negative("scenario.speed_std_mps", speed_std.unwrap_or(0.0))?,
        },
        other => {
            return Err(field_err(
                "scenario.kind",
                format!("unknown scenario `{other}` (expected s1, s2, s3 or s4)"),
            ))
        }
    };
    if kind_name != "s3" && (s.q.is_some() || s.intra_jitter_s.is_some()) {
        return Err(field_err("scenario.q", "only valid with kind = \"s3\""));
    }
    if kind_name != "s4" && speed_std.is_some() {
        return Err(field_err("scenario.speed_std_mps", "only valid with kind = \"s4\""));
    }
    let fleet_size = match (s.n_evs, s.arrival_rate_per_s) {
        (Some(_), Some(_)) => {
            return Err(field_err("scenario.n_evs", "give either `n_evs` or `arrival_rate_per_s`, not both"))
        }
        (Some(0), None) => return Err(field_err("scenario.n_evs", "must be >= 1")),
        (Some(n), None) => FleetSize::Fixed(n),
        (None, Some(rate)) => FleetSize::Poisson {
            arrival_rate: non_negative("scenario.arrival_rate_per_s", rate)?,
        },
        (None, None) => FleetSize::Fixed(192),
    };
    if let (ScenarioKind::Platoons { q, .. }, FleetSize::Fixed(n)) = (kind, fleet_size) {
        if q > n {
            return Err(field_err("scenario.q", format!("platoon size {q} exceeds n_evs = {n}")));
        }
    }
    let edge_mode = match s.edge_mode.as_deref().unwrap_or("periodic") {
        "periodic" => EdgeMode::Periodic,
        "finite" => EdgeMode::Finite,
        other => {
            return Err(field_err(
                "scenario.edge_mode",
                format!("unknown edge mode `{other}` (expected periodic or finite)"),
            ))
        }
    };

    let rr = &raw.run;
    let window = match &rr.window {
        Some(w) => w.parse::<Window>().map_err(|e| field_err("run.window", e))?,
        None => Window::Hanning,
    };
    let runs = rr.runs.unwrap_or(200);
    if runs == 0 {
        return Err(field_err("run.runs", "must be >= 1"));
    }
    let overlap = rr.thc_overlap.unwrap_or(0.5);
    check("run.thc_overlap", overlap, (0.0..1.0).contains(&overlap), "in [0, 1)")?;
    let run = RunSettings {
        seed: rr.seed.unwrap_or(1),
        runs,
        duration: positive("run.duration_s", rr.duration_s.unwrap_or(60.0))?,
        rate: positive("run.rate_hz", rr.rate_hz.unwrap_or(DEFAULT_SAMPLE_RATE))?,
        window,
        guard_hz: positive("run.guard_hz", rr.guard_hz.unwrap_or(DEFAULT_GUARD_HZ))?,
        max_lag: non_negative("run.max_lag_s", rr.max_lag_s.unwrap_or(2.0))?,
        thc_window: positive("run.thc_window_s", rr.thc_window_s.unwrap_or(60.0))?,
        thc_overlap: overlap,
    };

    let microsim = resolve_microsim(&raw.microsim, run.seed)?;
    Ok(Config {
        er,
        rx_len,
        density_mean,
        density_std,
        speed,
        control,
        kind,
        fleet_size,
        edge_mode,
        run,
        microsim,
    })
}

fn resolve_microsim(m: &RawMicrosim, seed: u64) -> Result<MicrosimSettings> {
    let preset = m.preset.clone().unwrap_or_else(|| "free_flow".into());
    let jam = either(m.jam_speed_mps, "microsim.jam_speed_mps", m.jam_speed_mph, "microsim.jam_speed_mph", MPH)?;
    let mut sim = match preset.as_str() {
        "free_flow" => {
            if jam.is_some() {
                return Err(field_err("microsim.jam_speed_mps", "only valid with preset = \"congestion\""));
            }
            SimConfig::free_flow(seed)
        }
        "congestion" => SimConfig::congestion(positive("microsim.jam_speed_mps", jam.unwrap_or(7.81))?, seed),
        other => {
            return Err(field_err(
                "microsim.preset",
                format!("unknown preset `{other}` (expected free_flow or congestion)"),
            ))
        }
    };
    if let Some(len) = either(m.road_len_m, "microsim.road_len_m", m.road_len_mi, "microsim.road_len_mi", MILE)? {
        let old = sim.road_len;
        sim.road_len = positive("microsim.road_len_m", len)?;
        // Preset zone boundaries scale with the road.
        for z in sim.zones.iter_mut() {
            z.start *= sim.road_len / old;
        }
    }
    if let Some(zones) = &m.zones {
        sim.zones = zones.clone();
    }
    let set = |target: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *target = v;
        }
    };
    set(&mut sim.arrival_rate, m.arrival_rate_per_s);
    if let Some(d) = m.desired_speed {
        sim.desired_speed = d;
    }
    set(&mut sim.a_max, m.a_max_mps2);
    set(&mut sim.b_decel, m.b_decel_mps2);
    set(&mut sim.min_gap, m.min_gap_m);
    set(&mut sim.reaction_time, m.reaction_time_s);
    set(&mut sim.dt, m.dt_s);
    set(&mut sim.max_speed, m.max_speed_mps);
    set(&mut sim.imperfection, m.imperfection);
    set(&mut sim.vehicle_len, m.vehicle_len_m);
    sim.validate().map_err(|e| field_err("microsim", e))?;
    let duration = positive("microsim.sim_duration_s", m.sim_duration_s.unwrap_or(2400.0))?;
    let warmup = non_negative("microsim.warmup_s", m.warmup_s.unwrap_or(600.0))?;
    if warmup >= duration {
        return Err(field_err("microsim.warmup_s", "must be shorter than sim_duration_s"));
    }
    Ok(MicrosimSettings {
        preset,
        sim,
        duration,
        warmup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Config> {
        parse_config_str(text, "test.toml")
    }

    #[test]
    fn indot_profile_defaults() {
        let c = parse("profile = \"indot\"").unwrap();
        assert!((c.er.tx_len() - 3.66).abs() < 0.01);
        assert!((c.er.gap() - 0.91).abs() < 0.01);
        assert_eq!(c.rx_len, 1.8);
        assert_eq!(c.er.rated_density(), 111.11);
        assert_eq!(c, Config::indot());
    }

    #[test]
    fn empty_or_unknown_is_rejected() {
        let err = parse("").unwrap_err().to_string();
        assert!(err.contains("profile"), "{err}");
        let err = parse("profile = \"indot\"\n[ev]\nwheel = 3").unwrap_err().to_string();
        assert!(err.contains("wheel"), "{err}");
        assert!(parse("profile = \"other\"").is_err());
    }

    #[test]
    fn negative_gap_rejected_with_path() {
        let err = parse("profile = \"indot\"\n[roadway]\ngap_m = -1.0").unwrap_err().to_string();
        assert!(err.contains("roadway.gap_m"), "{err}");
    }

    #[test]
    fn custom_needs_geometry() {
        let err = parse("profile = \"custom\"").unwrap_err().to_string();
        assert!(err.contains("roadway.tx_len_m"), "{err}");
        let c = parse(
            "profile = \"custom\"\n[roadway]\ntx_len_m = 2.0\ngap_m = 1.0\nrated_density_kw_per_m = 50\n[ev]\nrx_len_m = 1.0\ndensity_mean_kw_per_m = 40",
        )
        .unwrap();
        assert_eq!(c.er.seg_len(), 3.0);
    }

    #[test]
    fn imperial_units_convert() {
        let c = parse("profile = \"indot\"\n[ev]\nspeed_mph = 55\n[roadway]\ntotal_len_mi = 2.5").unwrap();
        assert!((c.speed - 24.5872).abs() < 1e-9);
        assert!((c.er.total_len() - 4023.36).abs() < 1e-9);
        let raw = c.to_raw();
        assert_eq!(raw.ev.speed_mps, Some(c.speed));
        assert_eq!(raw.ev.speed_mph, None);
        assert!(parse("profile = \"indot\"\n[ev]\nspeed_mph = 55\nspeed_mps = 20").is_err());
    }

    #[test]
    fn snapshot_round_trips() {
        for text in [
            "profile = \"indot\"",
            "profile = \"indot\"\n[scenario]\nkind = \"s3\"\nq = 4\nintra_jitter_s = 0.01\nn_evs = 64",
            "profile = \"indot\"\n[scenario]\nkind = \"s4\"\nspeed_std_mph = 2.75\narrival_rate_per_s = 0.3",
            "profile = \"indot\"\n[ev]\ncontrol = \"clipped\"\npeak_density_kw_per_m = 100\n[microsim]\npreset = \"congestion\"\njam_speed_mps = 8",
        ] {
            let c = parse(text).unwrap();
            let raw = c.to_raw();
            assert_eq!(resolve(&raw).unwrap(), c);
            let json = serde_json::to_string(&raw).unwrap();
            let back: RawConfig = serde_json::from_str(&json).unwrap();
            assert_eq!(resolve(&back).unwrap(), c);
            let toml_text = toml::to_string(&raw).unwrap();
            assert_eq!(parse(&toml_text).unwrap(), c);
        }
    }

    #[test]
    fn scenario_field_checks() {
        assert!(parse("profile = \"indot\"\n[scenario]\nkind = \"s2\"\nq = 3").is_err());
        assert!(parse("profile = \"indot\"\n[scenario]\nkind = \"s3\"\nq = 300\nn_evs = 10").is_err());
        assert!(parse("profile = \"indot\"\n[scenario]\nkind = \"s5\"").is_err());
        assert!(parse("profile = \"indot\"\n[run]\nwindow = \"blackman\"").is_err());
        assert!(parse("profile = \"indot\"\n[ev]\ndensity_mean_kw_per_m = 200").is_err());
        assert!(parse("profile = \"indot\"\n[microsim]\nwarmup_s = 5000").is_err());
    }
}
