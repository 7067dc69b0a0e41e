//! The `er-spectra` command line.
//!
//! Exit codes: 0 on success, 1 when configuration, input or computation
//! fails, 2 on usage errors. Outputs are built in memory and only written,
//! together with `manifest.json`, once the whole command has succeeded.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::builder::PossibleValuesParser;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::analytic::{AnalyticParams, AnalyticScenario, AutocorrSeries};
use crate::config::{parse_config, resolve, Config, Profile, RawConfig};
use crate::er_model::ErConfig;
use crate::error::{Error, Result};
use crate::harmonics::{fundamental_frequency, low_frequency_risk, thc_line, thc_share, FsCoefficients};
use crate::manifest::{sha256_hex, write_outputs, InputRef, Manifest, Output, MANIFEST_FILE};
use crate::microsim::{run as run_microsim, SimOutput};
use crate::rng::run_seed;
use crate::signal::{sig9, synthesize_total_load, LoadSignal};
use crate::spectral::{
    average_spectra, band_power, empirical_autocorrelation, empirical_thc, periodogram, sliding_thc,
    EstimatedSpectrum,
};
use crate::traffic::{poisson_fleet_size, sample_fleet, FleetRealization, FleetSize, ScenarioKind};

pub const THREADS_ENV: &str = "ER_SPECTRA_THREADS";

#[derive(Debug, Parser)]
#[command(name = "er-spectra", version, about = "Load spectra of dynamic wireless charging on electrified roadways")]
struct Cli {
    /// Worker threads; overrides ER_SPECTRA_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fourier coefficients, fundamental frequency and THC of one EV.
    Coeffs(Common),
    /// Closed-form spectrum and autocorrelation of a scenario.
    Psd {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        s: ScenarioArgs,
    },
    /// One sampled fleet and its total load.
    Synth {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        s: ScenarioArgs,
    },
    /// Periodogram of one load, synthesized or read with --input.
    Periodogram {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        s: ScenarioArgs,
        #[command(flatten)]
        i: InputArg,
    },
    /// Monte-Carlo ensemble: averaged periodogram and autocorrelation.
    Mc {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        s: ScenarioArgs,
    },
    /// Sliding-window THC of one load, synthesized or read with --input.
    Thc {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        s: ScenarioArgs,
        #[command(flatten)]
        i: InputArg,
    },
    /// Car-following simulation and the resulting load.
    Microsim {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        m: MicrosimArgs,
    },
    /// Re-runs a manifest and checks the outputs against its digests.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration; the INDOT profile when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "er-spectra-out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    /// Load duration; simulated time for `microsim`.
    #[arg(long = "duration-s")]
    duration_s: Option<f64>,
    #[arg(long = "rate-hz")]
    rate_hz: Option<f64>,
    #[arg(long, value_parser = PossibleValuesParser::new(["rect", "hanning"]))]
    window: Option<String>,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    #[arg(long, value_parser = PossibleValuesParser::new(["s1", "s2", "s3", "s4"]))]
    scenario: Option<String>,
    /// Fixed fleet size.
    #[arg(long)]
    n: Option<usize>,
    /// Platoon size (s3).
    #[arg(long)]
    q: Option<usize>,
    /// Intra-platoon timing jitter in seconds (s3).
    #[arg(long = "jitter-s")]
    jitter_s: Option<f64>,
    /// Speed standard deviation in m/s (s4).
    #[arg(long = "speed-std")]
    speed_std: Option<f64>,
}

#[derive(Debug, Args)]
struct InputArg {
    /// Load CSV (`t_s,p_kw`) to analyse instead of a synthesized one.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MicrosimArgs {
    #[arg(long, value_parser = PossibleValuesParser::new(["free_flow", "congestion"]))]
    preset: Option<String>,
    #[arg(long = "jam-speed")]
    jam_speed: Option<f64>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Where to write the regenerated outputs; digests are checked either way.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Err(e) = init_threads(cli.threads) {
        eprintln!("error: {e}");
        return 1;
    }
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn init_threads(flag: Option<usize>) -> Result<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::config(THREADS_ENV, format!("`{v}` is not a thread count")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::config("threads", "must be >= 1"));
        }
        // A pool may already exist when called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn load_raw(path: Option<&Path>) -> Result<RawConfig> {
    match path {
        None => Ok(RawConfig {
            profile: Some(Profile::Indot),
            ..RawConfig::default()
        }),
        Some(p) => {
            // Parsing through `parse_config` first gives field-level errors.
            parse_config(p)?;
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            toml::from_str(&text).map_err(|e| Error::config(p.display().to_string(), e.to_string()))
        }
    }
}

fn apply_common(raw: &mut RawConfig, c: &Common) {
    if let Some(s) = c.seed {
        raw.run.seed = Some(s);
    }
    if let Some(r) = c.runs {
        raw.run.runs = Some(r);
    }
    if let Some(d) = c.duration_s {
        raw.run.duration_s = Some(d);
    }
    if let Some(r) = c.rate_hz {
        raw.run.rate_hz = Some(r);
    }
    if let Some(w) = &c.window {
        raw.run.window = Some(w.clone());
    }
}

fn apply_scenario(raw: &mut RawConfig, s: &ScenarioArgs) {
    let sc = &mut raw.scenario;
    if let Some(kind) = &s.scenario {
        sc.kind = Some(kind.clone());
        if kind != "s3" {
            sc.q = None;
            sc.intra_jitter_s = None;
        }
        if kind != "s4" {
            sc.speed_std_mps = None;
            sc.speed_std_mph = None;
        }
    }
    if let Some(n) = s.n {
        sc.n_evs = Some(n);
        sc.arrival_rate_per_s = None;
    }
    if let Some(q) = s.q {
        sc.q = Some(q);
    }
    if let Some(j) = s.jitter_s {
        sc.intra_jitter_s = Some(j);
    }
    if let Some(v) = s.speed_std {
        sc.speed_std_mps = Some(v);
        sc.speed_std_mph = None;
    }
}

fn dispatch(command: Command) -> Result<()> {
    let (name, common, raw, input) = match command {
        Command::Replay(args) => return replay(&args),
        Command::Coeffs(c) => {
            let mut raw = load_raw(c.config.as_deref())?;
            apply_common(&mut raw, &c);
            ("coeffs", c, raw, None)
        }
        Command::Psd { c, s } => scenario_cmd("psd", c, s)?,
        Command::Synth { c, s } => scenario_cmd("synth", c, s)?,
        Command::Mc { c, s } => scenario_cmd("mc", c, s)?,
        Command::Periodogram { c, s, i } => {
            let mut raw = load_raw(c.config.as_deref())?;
            apply_common(&mut raw, &c);
            apply_scenario(&mut raw, &s);
            ("periodogram", c, raw, i.input)
        }
        Command::Thc { c, s, i } => {
            let mut raw = load_raw(c.config.as_deref())?;
            apply_common(&mut raw, &c);
            apply_scenario(&mut raw, &s);
            ("thc", c, raw, i.input)
        }
        Command::Microsim { c, m } => {
            let mut raw = load_raw(c.config.as_deref())?;
            apply_common(&mut raw, &c);
            if let Some(d) = c.duration_s {
                raw.run.duration_s = None;
                raw.microsim.sim_duration_s = Some(d);
            }
            if let Some(p) = &m.preset {
                raw.microsim.preset = Some(p.clone());
            }
            if let Some(v) = m.jam_speed {
                raw.microsim.jam_speed_mps = Some(v);
                raw.microsim.jam_speed_mph = None;
            }
            ("microsim", c, raw, None)
        }
    };
    let cfg = resolve(&raw)?;
    run_resolved(name, &cfg, input.as_deref(), &common.out)
}

type Prepared = (&'static str, Common, RawConfig, Option<PathBuf>);

fn scenario_cmd(name: &'static str, c: Common, s: ScenarioArgs) -> Result<Prepared> {
    let mut raw = load_raw(c.config.as_deref())?;
    apply_common(&mut raw, &c);
    apply_scenario(&mut raw, &s);
    Ok((name, c, raw, None))
}

fn run_resolved(name: &str, cfg: &Config, input: Option<&Path>, out: &Path) -> Result<()> {
    let input_ref = match input {
        Some(p) => {
            let data = std::fs::read(p).map_err(|e| Error::io(p, e))?;
            Some(InputRef {
                path: p.to_path_buf(),
                sha256: sha256_hex(&data),
            })
        }
        None => None,
    };
    let outputs = execute(name, cfg, input)?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: name.into(),
        root_seed: cfg.run.seed,
        config: cfg.to_raw(),
        input: input_ref,
        outputs: outputs.iter().map(Output::entry).collect(),
    };
    write_outputs(out, &manifest, &outputs)?;
    println!("wrote {} files and {} to {}", outputs.len(), MANIFEST_FILE, out.display());
    Ok(())
}

fn replay(args: &ReplayArgs) -> Result<()> {
    let manifest = Manifest::read(&args.manifest)?;
    let cfg = resolve(&manifest.config)?;
    if let Some(input) = &manifest.input {
        let data = std::fs::read(&input.path).map_err(|e| Error::io(&input.path, e))?;
        if sha256_hex(&data) != input.sha256 {
            return Err(Error::config(
                input.path.display().to_string(),
                "input file changed since the manifest was written",
            ));
        }
    }
    let outputs = execute(&manifest.command, &cfg, manifest.input.as_ref().map(|i| i.path.as_path()))?;
    if let Some(out) = &args.out {
        let fresh = Manifest {
            outputs: outputs.iter().map(Output::entry).collect(),
            ..manifest.clone()
        };
        write_outputs(out, &fresh, &outputs)?;
    }
    let bad = manifest.mismatches(&outputs);
    if !bad.is_empty() {
        return Err(Error::config(
            args.manifest.display().to_string(),
            format!("replay differs in {}", bad.join(", ")),
        ));
    }
    println!("replayed `{}`: {} outputs match", manifest.command, outputs.len());
    Ok(())
}

/// Runs one command on a resolved configuration.
pub fn execute(name: &str, cfg: &Config, input: Option<&Path>) -> Result<Vec<Output>> {
    match name {
        "coeffs" => coeffs(cfg),
        "psd" => psd(cfg),
        "synth" => synth(cfg),
        "periodogram" => periodogram_cmd(cfg, input),
        "mc" => monte_carlo(cfg),
        "thc" => thc_cmd(cfg, input),
        "microsim" => microsim_cmd(cfg),
        other => Err(Error::config("command", format!("unknown command `{other}`"))),
    }
}

fn csv<F>(file: &str, f: F) -> Output
where
    F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
{
    let mut data = Vec::new();
    f(&mut data).expect("writing to memory cannot fail");
    Output {
        file: file.into(),
        data,
    }
}

fn summary(rows: &[(&str, f64)]) -> Output {
    csv("summary.csv", |out| {
        writeln!(out, "key,value")?;
        for (k, v) in rows {
            writeln!(out, "{k},{}", sig9(*v))?;
        }
        Ok(())
    })
}

fn coeffs(cfg: &Config) -> Result<Vec<Output>> {
    let c = FsCoefficients::new(&cfg.er, cfg.rx_len)?;
    let f0 = fundamental_frequency(&cfg.er, cfg.speed)?;
    let thc = thc_line(&c)?;
    let risk = low_frequency_risk(&cfg.er, cfg.speed)?;
    println!("c_0 = {:.6}  c_1/c_0 = {:.4}", c.c0(), c.get(1) / c.c0());
    println!("f_0 = {f0:.3} Hz at {:.2} m/s", cfg.speed);
    println!("THC_h = {thc:.2} %");
    println!(
        "low-frequency risk: {} (critical speed {:.3} m/s)",
        if risk.at_risk { "yes" } else { "no" },
        risk.critical_speed
    );
    let table = csv("coefficients.csv", |out| {
        writeln!(out, "m,freq_hz,c_m,share_pct")?;
        for (m, v) in c.values().iter().enumerate() {
            let share = if m == 0 { 0.0 } else { thc_share(&c, m).unwrap_or(0.0) };
            writeln!(out, "{m},{},{},{}", sig9(m as f64 * f0), sig9(*v), sig9(share))?;
        }
        Ok(())
    });
    Ok(vec![
        table,
        summary(&[
            ("c0", c.c0()),
            ("c1_over_c0", c.get(1) / c.c0()),
            ("thc_h_pct", thc),
            ("speed_mps", cfg.speed),
            ("f0_hz", f0),
            ("critical_speed_mps", risk.critical_speed),
            ("low_frequency_risk", if risk.at_risk { 1.0 } else { 0.0 }),
            ("order", c.order() as f64),
        ]),
    ])
}

/// Fleet size used by closed-form results.
fn analytic_n(cfg: &Config) -> Result<usize> {
    Ok(match cfg.fleet_size {
        FleetSize::Fixed(n) => n,
        FleetSize::Poisson { arrival_rate } => {
            poisson_fleet_size(arrival_rate, cfg.er.total_len(), cfg.speed, cfg.run.seed)?.deterministic
        }
    })
}

fn analytic_params(cfg: &Config) -> Result<AnalyticParams> {
    let scenario = match cfg.kind {
        ScenarioKind::Synchronized => AnalyticScenario::S1,
        ScenarioKind::Independent => AnalyticScenario::S2,
        ScenarioKind::Platoons { q, .. } => AnalyticScenario::S3 { q },
        ScenarioKind::GaussianSpeeds { speed_std } => AnalyticScenario::S4 { speed_std },
    };
    Ok(AnalyticParams {
        er: cfg.er,
        rx_len: cfg.rx_len,
        n: analytic_n(cfg)?,
        density_mean: cfg.density_mean,
        density_std: cfg.density_std,
        speed: cfg.speed,
        scenario,
    })
}

fn lag_grid(cfg: &Config) -> Vec<f64> {
    let n = (cfg.run.max_lag * cfg.run.rate).floor() as usize;
    (0..=n).map(|k| k as f64 / cfg.run.rate).collect()
}

fn psd(cfg: &Config) -> Result<Vec<Output>> {
    let params = analytic_params(cfg)?;
    let spectrum = params.spectrum()?;
    let thc = crate::analytic::thc_continuous(&spectrum)?;
    let mut outputs = vec![csv("spectrum.csv", |out| spectrum.write_csv(out))];
    if params.scenario != AnalyticScenario::S1 {
        let r = params.autocorrelation(&lag_grid(cfg))?;
        outputs.push(csv("autocorrelation.csv", |out| r.write_csv(out)));
    }
    outputs.push(summary(&[
        ("n_evs", params.n as f64),
        ("dc_kw", spectrum.dc_weight.sqrt()),
        ("harmonic_power_kw2", spectrum.harmonic_power()),
        ("thc_pct", thc),
        ("f0_hz", fundamental_frequency(&cfg.er, cfg.speed)?),
    ]));
    Ok(outputs)
}

fn synthesize(cfg: &Config, seed: u64) -> Result<(FleetRealization, LoadSignal)> {
    let fleet = sample_fleet(&cfg.scenario_spec(seed), &cfg.er)?;
    let load = synthesize_total_load(&fleet, &cfg.er, cfg.run.duration, cfg.run.rate, cfg.edge_mode)?;
    Ok((fleet, load))
}

fn synth(cfg: &Config) -> Result<Vec<Output>> {
    let (fleet, load) = synthesize(cfg, cfg.run.seed)?;
    let fleet_csv = csv("fleet.csv", |out| {
        writeln!(out, "ev,density_kw_per_m,timing_s,speed_mps,platoon")?;
        for (i, (ev, p)) in fleet.evs.iter().zip(&fleet.platoon).enumerate() {
            let platoon = p.map_or(String::from("-1"), |p| p.to_string());
            writeln!(out, "{i},{},{},{},{platoon}", sig9(ev.density), sig9(ev.timing), sig9(ev.speed))?;
        }
        Ok(())
    });
    Ok(vec![csv("load.csv", |out| load.write_csv(out)), fleet_csv])
}

fn load_input(path: &Path) -> Result<LoadSignal> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    LoadSignal::read_csv(std::io::BufReader::new(file), path)
}

fn harmonic_readout(est: &EstimatedSpectrum, f0: f64, guard: f64) -> Result<(f64, f64, f64, f64)> {
    let band = band_power(est, f0, (0.5 * f0).min(est.nyquist() - f0))?;
    let thc = empirical_thc(est, guard, Some(f0))?;
    Ok((est.dc_power.sqrt(), band.power, band.amplitude, thc))
}

fn periodogram_cmd(cfg: &Config, input: Option<&Path>) -> Result<Vec<Output>> {
    let load = match input {
        Some(p) => load_input(p)?,
        None => synthesize(cfg, cfg.run.seed)?.1,
    };
    let est = periodogram(&load, cfg.run.window)?;
    let f0 = fundamental_frequency(&cfg.er, cfg.speed)?;
    let (dc, h1_power, h1_amp, thc) = harmonic_readout(&est, f0, cfg.run.guard_hz)?;
    Ok(vec![
        csv("periodogram.csv", |out| est.write_csv(out)),
        summary(&[
            ("dc_kw", dc),
            ("h1_power_kw2", h1_power),
            ("h1_amplitude_kw", h1_amp),
            ("thc_pct", thc),
            ("total_power_kw2", est.total_power()),
        ]),
    ])
}

struct RunResult {
    seed: u64,
    n_evs: usize,
    spectrum: EstimatedSpectrum,
    autocorr: Option<AutocorrSeries>,
}

fn monte_carlo(cfg: &Config) -> Result<Vec<Output>> {
    let want_autocorr = cfg.run.max_lag < 0.5 * cfg.run.duration;
    let results = (0..cfg.run.runs as u64)
        .into_par_iter()
        .map(|r| {
            let seed = run_seed(cfg.run.seed, r);
            let (fleet, load) = synthesize(cfg, seed)?;
            let spectrum = periodogram(&load, cfg.run.window)?;
            let autocorr = if want_autocorr {
                Some(empirical_autocorrelation(&load, cfg.run.max_lag)?)
            } else {
                None
            };
            Ok(RunResult {
                seed,
                n_evs: fleet.len(),
                spectrum,
                autocorr,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let f0 = fundamental_frequency(&cfg.er, cfg.speed)?;
    let spectra: Vec<EstimatedSpectrum> = results.iter().map(|r| r.spectrum.clone()).collect();
    let avg = average_spectra(&spectra)?;
    let (dc, h1_power, h1_amp, thc) = harmonic_readout(&avg, f0, cfg.run.guard_hz)?;

    let runs_csv = csv("runs.csv", |out| {
        writeln!(out, "run,seed,n_evs,dc_kw,h1_amplitude_kw,thc_pct")?;
        for (i, r) in results.iter().enumerate() {
            let (d, _, a, t) = harmonic_readout(&r.spectrum, f0, cfg.run.guard_hz).unwrap_or((f64::NAN, 0.0, f64::NAN, f64::NAN));
            writeln!(out, "{i},{},{},{},{},{}", r.seed, r.n_evs, sig9(d), sig9(a), sig9(t))?;
        }
        Ok(())
    });

    let mut rows = vec![
        ("runs", cfg.run.runs as f64),
        ("dc_kw", dc),
        ("h1_power_kw2", h1_power),
        ("h1_amplitude_kw", h1_amp),
        ("thc_pct", thc),
    ];
    // Closed-form comparison where the scenario admits one.
    if let Ok(spectrum) = analytic_params(cfg).and_then(|p| p.spectrum()) {
        let line = spectrum
            .lines
            .first()
            .map(|l| l.power)
            .or_else(|| spectrum.bells.first().map(|b| b.power))
            .unwrap_or(0.0);
        rows.push(("analytic_dc_kw", spectrum.dc_weight.sqrt()));
        rows.push(("analytic_h1_amplitude_kw", (2.0 * line).sqrt()));
        if let Ok(t) = crate::analytic::thc_continuous(&spectrum) {
            rows.push(("analytic_thc_pct", t));
        }
    }

    let mut outputs = vec![csv("periodogram.csv", |out| avg.write_csv(out)), runs_csv];
    if want_autocorr {
        let series: Vec<&AutocorrSeries> = results.iter().filter_map(|r| r.autocorr.as_ref()).collect();
        let mut values = vec![0.0; series[0].values.len()];
        for s in &series {
            for (acc, v) in values.iter_mut().zip(&s.values) {
                *acc += v;
            }
        }
        values.iter_mut().for_each(|v| *v /= series.len() as f64);
        let mean = AutocorrSeries {
            lags: series[0].lags.clone(),
            values,
        };
        outputs.push(csv("autocorrelation.csv", |out| mean.write_csv(out)));
    }
    outputs.push(summary(&rows));
    Ok(outputs)
}

fn thc_cmd(cfg: &Config, input: Option<&Path>) -> Result<Vec<Output>> {
    let load = match input {
        Some(p) => load_input(p)?,
        None => synthesize(cfg, cfg.run.seed)?.1,
    };
    let win = cfg.run.thc_window.min(load.duration());
    let series = sliding_thc(&load, win, cfg.run.thc_overlap, cfg.run.guard_hz, cfg.run.window)?;
    let mean = series.thc.iter().sum::<f64>() / series.thc.len() as f64;
    Ok(vec![
        csv("thc.csv", |out| series.write_csv(out)),
        summary(&[
            ("windows", series.thc.len() as f64),
            ("window_s", series.window_len),
            ("thc_mean_pct", mean),
            ("thc_max_pct", series.max().unwrap_or(0.0)),
        ]),
    ])
}

fn microsim_cmd(cfg: &Config) -> Result<Vec<Output>> {
    let m = &cfg.microsim;
    let mut sim_cfg = m.sim.clone();
    sim_cfg.seed = cfg.run.seed;
    let out: SimOutput = run_microsim(&sim_cfg, m.duration)?;
    let er = ErConfig::new(cfg.er.tx_len(), cfg.er.gap(), sim_cfg.road_len, cfg.er.rated_density())?;
    let span = m.duration - m.warmup;
    let load = out.load(&er, cfg.control, sim_cfg.rx_len, m.warmup, span, cfg.run.rate)?;
    let win = cfg.run.thc_window.min(span);
    let series = sliding_thc(&load, win, cfg.run.thc_overlap, cfg.run.guard_hz, cfg.run.window)?;

    let v_bar = out.mean_speed(m.warmup, m.duration);
    let seg_len = (cfg.run.duration.min(span) * cfg.run.rate).round() as usize;
    let est = periodogram(&load.slice(0, seg_len), cfg.run.window)?;
    let f0 = v_bar / er.seg_len();
    let mut rows = vec![
        ("vehicles", out.records.len() as f64),
        ("mean_on_segment", out.mean_count(m.warmup, m.duration)),
        ("mean_speed_mps", v_bar),
        ("load_mean_kw", load.mean()),
        ("thc_mean_pct", series.thc.iter().sum::<f64>() / series.thc.len() as f64),
        ("thc_max_pct", series.max().unwrap_or(0.0)),
    ];
    if f0 > 2.0 * cfg.run.guard_hz {
        let (dc, h1_power, h1_amp, thc) = harmonic_readout(&est, f0, cfg.run.guard_hz)?;
        rows.extend([
            ("dc_kw", dc),
            ("h1_power_kw2", h1_power),
            ("h1_amplitude_kw", h1_amp),
            ("thc_first_window_pct", thc),
        ]);
    }
    let counts = csv("counts.csv", |o| {
        writeln!(o, "t_s,on_segment")?;
        let mut t = 0.0;
        while t <= m.duration {
            writeln!(o, "{},{}", sig9(t), out.count_at(t))?;
            t += 1.0;
        }
        Ok(())
    });
    Ok(vec![
        csv("trajectories.csv", |o| out.write_trajectory_csv(o)),
        csv("vehicles.csv", |o| out.write_vehicle_csv(o)),
        counts,
        csv("load.csv", |o| load.write_csv(o)),
        csv("periodogram.csv", |o| est.write_csv(o)),
        csv("thc.csv", |o| series.write_csv(o)),
        summary(&rows),
    ])
}
