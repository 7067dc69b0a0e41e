//! Single-lane Krauss car-following simulator.
//!
//! Each step, every vehicle picks
//! `v* = min(v + a_max dt, v_desired, v_zone, v_safe)` with
//! `v_safe = v_l + (g - v_l tau) / ((v + v_l) / (2 b) + tau)`, where `g` is
//! the bumper gap minus `min_gap`, then dawdles to
//! `max(0, v* - eps a_max dt U)`. Updates are synchronous and vehicles are
//! ordered front to back. Positions refer to the front bumper, which also
//! carries the receiver front.

use std::collections::{BTreeMap, VecDeque};
use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::er_model::{ev_load_at_position, ControlMode, ErConfig, EvParams, Trajectory, INDOT_RX_LEN};
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::rng::Substreams;
use crate::signal::{read_numeric_csv, sig9, LoadSignal, CHUNK};
use crate::traffic::truncated_normal;

/// Length of a tractor with semi-trailer, m.
pub const TRUCK_LEN: f64 = 17.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Zone {
    pub start: f64,
    pub speed_limit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncatedGaussian {
    pub mean: f64,
    pub std: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub road_len: f64,
    /// Sorted by start; the first zone starts at 0.
    pub zones: Vec<Zone>,
    /// Poisson arrivals per second at the road start.
    pub arrival_rate: f64,
    pub desired_speed: TruncatedGaussian,
    pub density_mean: f64,
    pub density_std: f64,
    pub a_max: f64,
    /// Comfortable deceleration, positive.
    pub b_decel: f64,
    pub min_gap: f64,
    pub reaction_time: f64,
    pub dt: f64,
    pub max_speed: f64,
    /// Dawdling factor in `[0, 1]`.
    pub imperfection: f64,
    pub vehicle_len: f64,
    pub rx_len: f64,
    pub seed: u64,
}

impl SimConfig {
    /// Light traffic on a 4 km road without a speed limit below `max_speed`.
    pub fn free_flow(seed: u64) -> Self {
        Self {
            road_len: 4000.0,
            zones: vec![Zone {
                start: 0.0,
                speed_limit: 36.0,
            }],
            arrival_rate: 0.21,
            desired_speed: TruncatedGaussian {
                mean: 24.56,
                std: 2.45,
                lo: 20.11,
                hi: 29.05,
            },
            density_mean: 94.45,
            density_std: 5.55,
            a_max: 2.6,
            b_decel: 4.5,
            min_gap: 2.5,
            reaction_time: 1.0,
            dt: 0.1,
            max_speed: 36.0,
            imperfection: 0.5,
            vehicle_len: TRUCK_LEN,
            rx_len: INDOT_RX_LEN,
            seed,
        }
    }

    /// Heavy traffic with the second half of the road limited to `jam_speed`.
    pub fn congestion(jam_speed: f64, seed: u64) -> Self {
        let mut cfg = Self::free_flow(seed);
        cfg.arrival_rate = 1.0;
        cfg.zones = vec![
            Zone {
                start: 0.0,
                speed_limit: 24.56,
            },
            Zone {
                start: 0.5 * cfg.road_len,
                speed_limit: jam_speed,
            },
        ];
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("road_len", self.road_len)?;
        ensure_non_negative("arrival_rate", self.arrival_rate)?;
        ensure_positive("a_max", self.a_max)?;
        ensure_positive("b_decel", self.b_decel)?;
        ensure_positive("min_gap", self.min_gap)?;
        ensure_non_negative("reaction_time", self.reaction_time)?;
        ensure_positive("dt", self.dt)?;
        ensure_positive("max_speed", self.max_speed)?;
        ensure_positive("vehicle_len", self.vehicle_len)?;
        ensure_positive("rx_len", self.rx_len)?;
        ensure_positive("density_mean", self.density_mean)?;
        ensure_non_negative("density_std", self.density_std)?;
        if !(0.0..=1.0).contains(&self.imperfection) {
            return Err(Error::domain("imperfection", self.imperfection, "must lie in [0, 1]"));
        }
        let d = &self.desired_speed;
        ensure_positive("desired_speed.mean", d.mean)?;
        ensure_non_negative("desired_speed.std", d.std)?;
        if !(d.lo < d.hi) || !(d.mean > d.lo && d.mean <= d.hi) {
            return Err(Error::domain("desired_speed.mean", d.mean, "must lie in (lo, hi]"));
        }
        match self.zones.first() {
            Some(z) if z.start == 0.0 => {}
            _ => return Err(Error::domain("zones", 0.0, "the first zone must start at 0")),
        }
        for w in self.zones.windows(2) {
            if !(w[1].start > w[0].start) || w[1].start >= self.road_len {
                return Err(Error::domain(
                    "zones.start",
                    w[1].start,
                    "zone starts must increase and stay below road_len",
                ));
            }
        }
        for z in &self.zones {
            ensure_positive("zones.speed_limit", z.speed_limit)?;
        }
        Ok(())
    }

    /// Speed limit in force at `x`.
    pub fn zone_limit(&self, x: f64) -> f64 {
        self.zones
            .iter()
            .rev()
            .find(|z| z.start <= x)
            .map_or(self.zones[0].speed_limit, |z| z.speed_limit)
    }

    /// Highest speed at `x` from which every lower limit ahead can be met
    /// by braking at `b_decel`.
    fn allowed_speed(&self, x: f64) -> f64 {
        let mut v = self.zone_limit(x).min(self.max_speed);
        for z in self.zones.iter().filter(|z| z.start > x) {
            v = v.min((z.speed_limit.powi(2) + 2.0 * self.b_decel * (z.start - x)).sqrt());
        }
        v
    }

    /// Krauss safe speed for net gap `gap` (bumper gap minus `min_gap`).
    fn safe_speed(&self, v: f64, v_lead: f64, gap: f64) -> f64 {
        let tau = self.reaction_time;
        v_lead + (gap - v_lead * tau) / ((v + v_lead) / (2.0 * self.b_decel) + tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vehicle {
    pub id: u64,
    /// Front bumper, m from the road start.
    pub x: f64,
    pub v: f64,
    pub desired: f64,
    pub density: f64,
}

/// Vehicles on the road, front to back, plus the entry queue.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub vehicles: Vec<Vehicle>,
    pub time: f64,
    /// Arrived vehicles still waiting for an entry gap.
    pub pending: VecDeque<Vehicle>,
    next_id: u64,
}

impl SimState {
    pub fn empty() -> Self {
        Self {
            vehicles: Vec::new(),
            time: 0.0,
            pending: VecDeque::new(),
            next_id: 0,
        }
    }

    /// Places vehicles directly; `vehicles` must be ordered front to back.
    pub fn with_vehicles(vehicles: Vec<Vehicle>) -> Self {
        let next_id = vehicles.iter().map(|v| v.id + 1).max().unwrap_or(0);
        Self {
            vehicles,
            next_id,
            ..Self::empty()
        }
    }
}

/// Randomness consumed by [`step`].
pub struct SimRng {
    traffic: ChaCha8Rng,
    streams: Substreams,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        let streams = Substreams::new(seed);
        Self {
            traffic: streams.fleet(),
            streams,
        }
    }
}

fn new_vehicle(cfg: &SimConfig, rng: &SimRng, id: u64) -> Result<Vehicle> {
    let mut r = rng.streams.ev(id as usize);
    let d = cfg.desired_speed;
    let desired = truncated_normal(&mut r, "desired_speed", d.mean, d.std, d.lo, d.hi)?;
    let density = truncated_normal(&mut r, "density", cfg.density_mean, cfg.density_std, 0.0, f64::MAX)?;
    Ok(Vehicle {
        id,
        x: 0.0,
        v: 0.0,
        desired,
        density,
    })
}

/// Advances the state by one time step.
pub fn step(state: &mut SimState, cfg: &SimConfig, rng: &mut SimRng) -> Result<()> {
    let dt = cfg.dt;
    let len = cfg.vehicle_len;
    let speeds: Vec<f64> = state
        .vehicles
        .iter()
        .enumerate()
        .map(|(i, veh)| {
            let mut target = (veh.v + cfg.a_max * dt)
                .min(veh.desired)
                .min(cfg.allowed_speed(veh.x));
            if i > 0 {
                let lead = &state.vehicles[i - 1];
                let gap = lead.x - len - veh.x - cfg.min_gap;
                target = target.min(cfg.safe_speed(veh.v, lead.v, gap));
            }
            let u: f64 = rng.traffic.random();
            (target.max(0.0) - cfg.imperfection * cfg.a_max * dt * u).max(0.0)
        })
        .collect();
    for (veh, v) in state.vehicles.iter_mut().zip(speeds) {
        veh.v = v;
        veh.x += v * dt;
    }
    state.time += dt;
    for w in state.vehicles.windows(2) {
        let gap = w[0].x - len - w[1].x;
        if gap < 0.0 {
            return Err(Error::Collision {
                follower: w[1].id,
                leader: w[0].id,
                time: state.time,
                gap,
            });
        }
    }
    state.vehicles.retain(|v| v.x - len <= cfg.road_len);

    if cfg.arrival_rate > 0.0 {
        let lambda = cfg.arrival_rate * dt;
        let arrivals = Poisson::new(lambda)
            .map_err(|_| Error::domain("arrival_rate", cfg.arrival_rate, "invalid Poisson rate"))?
            .sample(&mut rng.traffic) as u64;
        for _ in 0..arrivals {
            let veh = new_vehicle(cfg, rng, state.next_id)?;
            state.next_id += 1;
            state.pending.push_back(veh);
        }
    }
    if let Some(mut veh) = state.pending.front().copied() {
        let mut v = veh.desired.min(cfg.allowed_speed(0.0));
        let admissible = match state.vehicles.last() {
            None => true,
            Some(last) => {
                let gap = last.x - len - cfg.min_gap;
                v = v.min(cfg.safe_speed(v, last.v, gap));
                gap >= 0.0 && v >= 0.0
            }
        };
        if admissible {
            veh.v = v;
            state.pending.pop_front();
            state.vehicles.push(veh);
        }
    }
    Ok(())
}

/// Trajectory of one simulated vehicle, sampled every `dt` from `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleRecord {
    pub id: u64,
    pub desired: f64,
    pub density: f64,
    pub t0: f64,
    pub positions: Vec<f64>,
    pub speeds: Vec<f64>,
}

impl VehicleRecord {
    pub fn trajectory(&self, dt: f64) -> Trajectory {
        Trajectory::Sampled {
            t0: self.t0,
            dt,
            positions: self.positions.clone(),
        }
    }

    pub fn t_end(&self, dt: f64) -> f64 {
        self.t0 + dt * self.positions.len().saturating_sub(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub dt: f64,
    pub duration: f64,
    pub road_len: f64,
    /// Every vehicle that entered, by id.
    pub records: Vec<VehicleRecord>,
}

impl SimOutput {
    /// Vehicles whose front bumper lies on `[0, road_len]` at `t`.
    pub fn count_at(&self, t: f64) -> usize {
        self.records
            .iter()
            .filter(|r| {
                if t < r.t0 || t > r.t_end(self.dt) {
                    return false;
                }
                let i = (((t - r.t0) / self.dt).round() as usize).min(r.positions.len() - 1);
                (0.0..=self.road_len).contains(&r.positions[i])
            })
            .count()
    }

    /// Average of [`Self::count_at`] over `[t0, t1]` sampled once a second.
    pub fn mean_count(&self, t0: f64, t1: f64) -> f64 {
        let n = ((t1 - t0).floor() as usize).max(1);
        (0..n).map(|k| self.count_at(t0 + k as f64) as f64).sum::<f64>() / n as f64
    }

    /// Mean speed of vehicles on the road over `[t0, t1]`.
    pub fn mean_speed(&self, t0: f64, t1: f64) -> f64 {
        let (mut sum, mut n) = (0.0, 0usize);
        for r in &self.records {
            for (i, (x, v)) in r.positions.iter().zip(&r.speeds).enumerate() {
                let t = r.t0 + i as f64 * self.dt;
                if t >= t0 && t <= t1 && (0.0..=self.road_len).contains(x) {
                    sum += v;
                    n += 1;
                }
            }
        }
        sum / n.max(1) as f64
    }

    pub fn ev_params(&self, control: ControlMode, rx_len: f64) -> Vec<EvParams> {
        self.records
            .iter()
            .map(|r| EvParams {
                rx_len,
                density: r.density,
                timing: 0.0,
                speed: r.desired,
                control,
                entry_time: None,
            })
            .collect()
    }

    pub fn trajectories(&self) -> Vec<Trajectory> {
        self.records.iter().map(|r| r.trajectory(self.dt)).collect()
    }

    /// Total load over `[t_start, t_start + duration)`.
    pub fn load(
        &self,
        er: &ErConfig,
        control: ControlMode,
        rx_len: f64,
        t_start: f64,
        duration: f64,
        sample_rate: f64,
    ) -> Result<LoadSignal> {
        trajectories_to_load(
            &self.trajectories(),
            &self.ev_params(control, rx_len),
            er,
            t_start,
            duration,
            sample_rate,
        )
    }

    /// Writes `veh_id,t_s,x_m,v_mps` rows, vehicle by vehicle.
    pub fn write_trajectory_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "veh_id,t_s,x_m,v_mps")?;
        for r in &self.records {
            for (i, (x, v)) in r.positions.iter().zip(&r.speeds).enumerate() {
                let t = r.t0 + i as f64 * self.dt;
                writeln!(out, "{},{},{},{}", r.id, sig9(t), sig9(*x), sig9(*v))?;
            }
        }
        Ok(())
    }

    /// Writes `veh_id,density_kw_per_m,desired_speed_mps` rows.
    pub fn write_vehicle_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "veh_id,density_kw_per_m,desired_speed_mps")?;
        for r in &self.records {
            writeln!(out, "{},{},{}", r.id, sig9(r.density), sig9(r.desired))?;
        }
        Ok(())
    }
}

/// Runs `cfg` from an empty road for `duration` seconds.
pub fn run(cfg: &SimConfig, duration: f64) -> Result<SimOutput> {
    run_from(cfg, SimState::empty(), duration)
}

/// Runs `cfg` from `state`, recording every vehicle present or inserted.
pub fn run_from(cfg: &SimConfig, mut state: SimState, duration: f64) -> Result<SimOutput> {
    cfg.validate()?;
    ensure_non_negative("duration", duration)?;
    let mut rng = SimRng::new(cfg.seed);
    let steps = (duration / cfg.dt).round() as usize;
    let mut records: BTreeMap<u64, VehicleRecord> = BTreeMap::new();
    let record = |records: &mut BTreeMap<u64, VehicleRecord>, state: &SimState| {
        for veh in &state.vehicles {
            let r = records.entry(veh.id).or_insert_with(|| VehicleRecord {
                id: veh.id,
                desired: veh.desired,
                density: veh.density,
                t0: state.time,
                positions: Vec::new(),
                speeds: Vec::new(),
            });
            r.positions.push(veh.x);
            r.speeds.push(veh.v);
        }
    };
    record(&mut records, &state);
    for _ in 0..steps {
        step(&mut state, cfg, &mut rng)?;
        record(&mut records, &state);
    }
    Ok(SimOutput {
        dt: cfg.dt,
        duration: state.time,
        road_len: cfg.road_len,
        records: records.into_values().collect(),
    })
}

/// Sums per-vehicle loads on `[t_start, t_start + duration)`. Sampled
/// positions are linearly interpolated onto the load grid; a vehicle adds
/// nothing outside its trajectory's support.
pub fn trajectories_to_load(
    trajs: &[Trajectory],
    evs: &[EvParams],
    er: &ErConfig,
    t_start: f64,
    duration: f64,
    sample_rate: f64,
) -> Result<LoadSignal> {
    ensure_positive("duration", duration)?;
    ensure_positive("sample_rate", sample_rate)?;
    if trajs.len() != evs.len() {
        return Err(Error::domain(
            "trajectories",
            trajs.len() as f64,
            "need exactly one EV description per trajectory",
        ));
    }
    let n = (duration * sample_rate).round() as usize;
    let dt = 1.0 / sample_rate;
    let supports: Vec<(f64, f64)> = trajs.iter().map(Trajectory::support).collect();
    let mut samples = vec![0.0; n];
    samples
        .par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            let first = c * CHUNK;
            let t_lo = t_start + first as f64 * dt;
            let t_hi = t_start + (first + chunk.len()) as f64 * dt;
            for ((traj, ev), (s0, s1)) in trajs.iter().zip(evs).zip(&supports) {
                if *s1 < t_lo || *s0 > t_hi {
                    continue;
                }
                for (j, out) in chunk.iter_mut().enumerate() {
                    let t = t_start + (first + j) as f64 * dt;
                    if let Some(x) = traj.position_at(t) {
                        *out += ev_load_at_position(ev, er, x);
                    }
                }
            }
        });
    Ok(LoadSignal::new(samples, sample_rate, t_start))
}

/// Reads a trajectory dump back into per-vehicle sampled trajectories,
/// ordered by id. Each vehicle's rows must be evenly spaced in time.
pub fn read_trajectory_csv<R: BufRead>(input: R, path: &Path) -> Result<Vec<(u64, Trajectory)>> {
    let rows = read_numeric_csv(input, path, &["veh_id", "t_s", "x_m", "v_mps"])?;
    let mut by_id: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        by_id.entry(r[0] as u64).or_default().push((r[1], r[2]));
    }
    by_id
        .into_iter()
        .map(|(id, pts)| {
            let t0 = pts[0].0;
            let dt = if pts.len() > 1 { pts[1].0 - pts[0].0 } else { 1.0 };
            if !(dt > 0.0) {
                return Err(Error::Csv {
                    path: path.to_path_buf(),
                    line: 0,
                    msg: format!("vehicle {id}: time column is not increasing"),
                });
            }
            Ok((
                id,
                Trajectory::Sampled {
                    t0,
                    dt,
                    positions: pts.into_iter().map(|p| p.1).collect(),
                },
            ))
        })
        .collect()
}

/// Reads `veh_id,density_kw_per_m,desired_speed_mps` rows into a map.
pub fn read_vehicle_csv<R: BufRead>(input: R, path: &Path) -> Result<BTreeMap<u64, (f64, f64)>> {
    let rows = read_numeric_csv(input, path, &["veh_id", "density_kw_per_m", "desired_speed_mps"])?;
    Ok(rows.into_iter().map(|r| (r[0] as u64, (r[1], r[2]))).collect())
}
