//! Drivers behind the subcommands. Each writes its data files, the resolved
//! configuration and a JSON verdict summary into one output directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::constants::{self, FluidParams, Model};
use crate::dynamics::{self, RunOptions, RunState, StepperConfig};
use crate::experiments::{
    self, analytic_profile, choose_nu, DecayConfig, MollifierConfig, ReversalConfig, StaircaseSpec, Verdict,
};
use crate::interface_ops::QuadratureScheme;
use crate::spectral::Lattice;

use super::{checkpoint_read, checkpoint_write, emit_csv, emit_table, write_text, CliError, Experiment, RunConfig};

pub const VERDICT_FILE: &str = "verdict.json";
pub const CONFIG_FILE: &str = "config.txt";

/// Verdicts of one command and where its files went.
#[derive(Clone, Debug, PartialEq)]
pub struct CommandOutcome {
    pub out_dir: PathBuf,
    pub checks: Vec<Verdict>,
}

impl CommandOutcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|v| v.pass)
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    name: &'a str,
    pass: bool,
    measured: f64,
    bound: f64,
    tolerance: f64,
    checks: &'a [Verdict],
}

#[derive(Serialize)]
struct RunInfo {
    started_unix: u64,
    wall_seconds: f64,
    version: &'static str,
}

/// `--out` wins over the configured `out_dir`.
pub fn resolve_out_dir(cfg: &RunConfig, cli_out: Option<&Path>) -> PathBuf {
    cli_out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&cfg.out_dir))
}

fn params(cfg: &RunConfig) -> FluidParams {
    FluidParams::new(cfg.a_mu, cfg.a_rho)
}

fn scheme(cfg: &RunConfig) -> QuadratureScheme {
    QuadratureScheme {
        window_periods: cfg.window_periods,
        singular_fill: cfg.singular_fill,
        far_field: cfg.far_field,
        flat_route: cfg.flat_route,
        execution: cfg.execution,
        ..QuadratureScheme::default()
    }
}

fn stepper(cfg: &RunConfig) -> StepperConfig {
    StepperConfig {
        dt_max: cfg.dt_max,
        cfl_c: cfg.cfl_c,
        t_end: cfg.t_end,
        mollifier_eps: cfg.mollifier_eps,
        linear_coefficient: cfg.linear_coefficient,
        ..StepperConfig::default()
    }
}

fn lattice(cfg: &RunConfig) -> Result<Lattice, CliError> {
    Ok(Lattice::new(cfg.model.interface_dims(), cfg.n, cfg.period)?)
}

fn size_target(cfg: &RunConfig) -> f64 {
    cfg.size_fraction * constants::threshold(cfg.a_mu.abs(), cfg.model)
}

/// Run the configured experiment, writing every output under `out_dir`.
/// `exe` is the binary launched for the members of a sweep.
pub fn execute(cfg: &RunConfig, out_dir: &Path, exe: Option<&Path>) -> Result<CommandOutcome, CliError> {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    write_text(&out_dir.join(CONFIG_FILE), &cfg.to_text())?;
    let checks = match cfg.experiment {
        Experiment::Constants => constants_cmd(cfg, out_dir)?,
        Experiment::Simulate => simulate(cfg, out_dir)?,
        Experiment::Reverse => reverse(cfg, out_dir)?,
        Experiment::Decay => decay(cfg, out_dir)?,
        Experiment::Contraction => contraction(cfg, out_dir)?,
        Experiment::Mollifier => mollifier(cfg, out_dir)?,
        Experiment::Staircase => staircase(cfg, out_dir)?,
        Experiment::Sweep => sweep(cfg, out_dir, exe)?,
    };
    let outcome = CommandOutcome { out_dir: out_dir.to_path_buf(), checks };
    let primary = outcome.checks.iter().find(|v| !v.pass).or(outcome.checks.first());
    let summary = Summary {
        name: cfg.experiment.name(),
        pass: outcome.pass(),
        measured: primary.map_or(f64::NAN, |v| v.measured),
        bound: primary.map_or(f64::NAN, |v| v.bound),
        tolerance: primary.map_or(f64::NAN, |v| v.tolerance),
        checks: &outcome.checks,
    };
    write_json(&out_dir.join(VERDICT_FILE), &summary)?;
    let info = RunInfo { started_unix: started, wall_seconds: clock.elapsed().as_secs_f64(), version: env!("CARGO_PKG_VERSION") };
    write_json(&out_dir.join("run_info.json"), &info)?;
    Ok(outcome)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    write_text(path, &text)
}

/// Threshold table with columns `a_mu,threshold,sigma_at_half_threshold`.
pub fn write_threshold_curve(path: &Path, model: Model, samples: usize) -> Result<Verdict, CliError> {
    let curve = constants::threshold_curve(samples, model);
    let rows: Vec<Vec<f64>> = curve.iter().map(|p| vec![p.a_mu, p.threshold, p.sigma_at_half]).collect();
    emit_table(path, &["a_mu", "threshold", "sigma_at_half_threshold"], &rows)?;
    let worst_step = curve.windows(2).map(|w| w[1].threshold - w[0].threshold).fold(f64::NEG_INFINITY, f64::max);
    Ok(Verdict::new("threshold_decreasing", worst_step < 0.0, worst_step, 0.0, 0.0))
}

fn constants_cmd(cfg: &RunConfig, out: &Path) -> Result<Vec<Verdict>, CliError> {
    Ok(vec![write_threshold_curve(&out.join("curve.csv"), cfg.model, cfg.samples)?])
}

fn simulate(cfg: &RunConfig, out: &Path) -> Result<Vec<Verdict>, CliError> {
    let (state, params) = if cfg.resume.is_empty() {
        let f0 = analytic_profile(lattice(cfg)?, size_target(cfg));
        let nu = choose_nu(&f0, &params(cfg), cfg.model, cfg.nu_fraction);
        let p = params(cfg).with_nu(nu);
        (RunState::start(&f0, &p, cfg.model)?, p)
    } else {
        let snap = checkpoint_read(Path::new(&cfg.resume))?;
        let (state, nu) = RunState::from_snapshot(&snap)?;
        (state, params(cfg).with_nu(nu))
    };
    let opts = RunOptions {
        model: cfg.model,
        record_stride: cfg.record_stride,
        snapshot_stride: cfg.snapshot_stride,
        check_bounds: cfg.check_bounds,
        max_steps: None,
    };
    let (record, last) = dynamics::run_from(state, &params, &scheme(cfg), &stepper(cfg), &opts)?;
    emit_csv(&out.join("trajectory.csv"), &record.rows)?;
    write_json(&out.join("meta.json"), &record.meta)?;
    if !record.snapshots.is_empty() {
        let dir = out.join("snapshots");
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        for snap in &record.snapshots {
            let step = snap.state.get("step").copied().unwrap_or(0.0) as u64;
            checkpoint_write(&dir.join(format!("step_{step:08}.json")), snap)?;
        }
    }
    checkpoint_write(&out.join("final.json"), &last.to_snapshot(params.nu))?;
    let mut checks = vec![experiments::energy_monitor(&record), experiments::l2_monitor(&record)];
    if cfg.check_bounds {
        checks.push(experiments::bounds_monitor(&record));
    }
    let ended = record.rows.last().map_or(0.0, |r| r.t);
    checks.push(Verdict::new("completed", !record.blew_up() && ended >= cfg.t_end, ended, cfg.t_end, 0.0));
    Ok(checks)
}

fn contraction(cfg: &RunConfig, out: &Path) -> Result<Vec<Verdict>, CliError> {
    let lat = lattice(cfg)?;
    let f0 = analytic_profile(lat, size_target(cfg));
    let shift = [0.3 * cfg.period, 0.1 * cfg.period];
    let g0 = f0.axpy(cfg.perturbation, &analytic_profile(lat, 1.0).translate(shift))?;
    let report = experiments::contraction_monitor(&f0, &g0, &params(cfg), &scheme(cfg), &stepper(cfg))?;
    let rows: Vec<Vec<f64>> = report.times.iter().zip(&report.distance).map(|(t, d)| vec![*t, *d]).collect();
    emit_table(&out.join("contraction.csv"), &["t", "distance_f01"], &rows)?;
    Ok(vec![report.verdict])
}

fn reverse(cfg: &RunConfig, out: &Path) -> Result<Vec<Verdict>, CliError> {
    let rc = ReversalConfig {
        n: cfg.n,
        period: cfg.period,
        params: params(cfg),
        delta: cfg.delta,
        amplitude: cfg.amplitude,
        dt_max: cfg.dt_max,
        cfl_c: cfg.cfl_c,
    };
    let report = experiments::time_reversal_illposedness(&rc)?;
    let rows: Vec<Vec<f64>> =
        report.modes.iter().map(|m| vec![m.k as f64, m.measured_rate, m.linear_rate, m.relative_error()]).collect();
    emit_table(&out.join("reversal.csv"), &["k", "measured_rate", "linear_rate", "relative_error"], &rows)?;
    let mut rate = Verdict::new("reversal_rates", report.worst_rate_error <= 0.05, report.worst_rate_error, 0.05, 0.0);
    if report.blowup {
        rate = rate.with_note("reversed run blew up");
    }
    Ok(vec![
        rate,
        Verdict::new("reversal_recovery", report.recovery_error <= 1e-5, report.recovery_error, 1e-5, 0.0),
    ])
}

fn decay(cfg: &RunConfig, out: &Path) -> Result<Vec<Verdict>, CliError> {
    let dc = DecayConfig {
        n: cfg.n,
        period: cfg.period,
        params: params(cfg),
        size_fraction: cfg.size_fraction,
        spectral_power: cfg.spectral_power,
        spectral_width: cfg.spectral_width,
        t_end: cfg.t_end,
        dt_max: cfg.dt_max,
        cfl_c: cfg.cfl_c,
        window: (cfg.fit_t1, cfg.fit_t2),
    };
    let report = experiments::decay_experiment(&dc)?;
    let rows: Vec<Vec<f64>> = report.samples.iter().map(|s| vec![s.t, s.f11, s.h1]).collect();
    emit_table(&out.join("decay.csv"), &["t", "f11", "h1"], &rows)?;
    let band = |name: &str, fit: &Result<experiments::DecayFit, experiments::FitError>, centre: f64| match fit {
        Ok(fit) => Verdict::new(name, (fit.exponent - centre).abs() <= 0.3, fit.exponent, centre, 0.3)
            .with_note(format!("stderr {}, r^2 {}, {} samples", fit.stderr, fit.r_squared, fit.samples)),
        Err(e) => Verdict::new(name, false, f64::NAN, centre, 0.3).with_note(e.to_string()),
    };
    Ok(vec![band("f11_exponent", &report.f11_fit, -1.5), band("h1_exponent", &report.h1_fit, -1.0)])
}

fn mollifier(cfg: &RunConfig, out: &Path) -> Result<Vec<Verdict>, CliError> {
    let mc = MollifierConfig {
        n: cfg.n,
        period: cfg.period,
        params: params(cfg),
        size_fraction: cfg.size_fraction,
        t_end: cfg.t_end,
        dt_max: cfg.dt_max,
        cfl_c: cfg.cfl_c,
        linear_coefficient: cfg.linear_coefficient,
        eps: cfg.eps_list.clone(),
    };
    let report = experiments::mollifier_cauchy_rate(&mc)?;
    let rows: Vec<Vec<f64>> = report.differences.iter().map(|(e, d)| vec![*e, *d]).collect();
    emit_table(&out.join("mollifier.csv"), &["eps", "difference_f01"], &rows)?;
    let v = Verdict::new("mollifier_slope", report.slope >= 0.3, report.slope, 0.3, 0.0);
    Ok(vec![if report.monotone { v } else { v.with_note("differences not monotone in eps") }])
}

fn staircase(cfg: &RunConfig, out: &Path) -> Result<Vec<Verdict>, CliError> {
    let spec = StaircaseSpec {
        sigma_exp: cfg.sigma_exp,
        delta_exp: cfg.delta_exp,
        gamma_exp: cfg.gamma_exp,
        s_target: cfg.s_target,
        n_shells: cfg.n_shells,
    };
    let report = experiments::staircase(&spec, cfg.tail_start)?;
    let rows: Vec<Vec<f64>> = report
        .f11_partial
        .iter()
        .zip(&report.l2_partial)
        .zip(&report.hs_partial)
        .map(|(((n, a), (_, b)), (_, c))| vec![*n as f64, *a, *b, *c])
        .collect();
    emit_table(&out.join("staircase.csv"), &["shells", "f11_partial", "l2_partial", "hs_partial"], &rows)?;
    let ratio = report.f11_tail_ratio();
    let needed = 0.9 * (cfg.n_shells as f64 / cfg.tail_start as f64).ln() * report.hs_constant;
    let growth = report.hs_growth(cfg.tail_start, cfg.n_shells).unwrap_or(f64::NAN);
    Ok(vec![
        Verdict::new("f11_tail_ratio", ratio < 1e-6, ratio, 1e-6, 0.0),
        Verdict::new("hs_growth", growth >= needed, growth, needed, 0.0),
    ])
}

/// One `simulate` child process per `A_μ` in `sweep_a_mu`, each writing to
/// its own subdirectory.
fn sweep(cfg: &RunConfig, out: &Path, exe: Option<&Path>) -> Result<Vec<Verdict>, CliError> {
    let exe = match exe {
        Some(p) => p.to_path_buf(),
        None => std::env::current_exe().map_err(|e| CliError::io("current executable", e))?,
    };
    let mut children = Vec::new();
    for (i, &a_mu) in cfg.sweep_a_mu.iter().enumerate() {
        let label = format!("run_{i:03}");
        let dir = out.join(&label);
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let member = RunConfig { experiment: Experiment::Simulate, a_mu, out_dir: dir.display().to_string(), ..cfg.clone() };
        let cfg_path = dir.join("member.txt");
        write_text(&cfg_path, &member.to_text())?;
        let child = Command::new(&exe)
            .arg("simulate")
            .arg("--config")
            .arg(&cfg_path)
            .arg("--out")
            .arg(&dir)
            .spawn()
            .map_err(|e| CliError::io(&exe, e))?;
        children.push((label, a_mu, dir, child));
    }
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for (label, a_mu, dir, mut child) in children {
        let status = child.wait().map_err(|e| CliError::io(&exe, e))?;
        let code = status.code().unwrap_or(-1);
        if code != 0 && code != 2 {
            return Err(CliError::SweepMember { label, reason: format!("exit status {code}") });
        }
        let text = fs::read_to_string(dir.join(VERDICT_FILE)).map_err(|e| CliError::io(dir.join(VERDICT_FILE), e))?;
        let summary: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::SweepMember { label: label.clone(), reason: e.to_string() })?;
        let pass = summary["pass"].as_bool().unwrap_or(false);
        rows.push(vec![a_mu, if pass { 1.0 } else { 0.0 }]);
        checks.push(Verdict::new(&label, pass, a_mu, 0.0, 0.0).with_note(format!("a_mu = {a_mu}")));
    }
    emit_table(&out.join("sweep.csv"), &["a_mu", "pass"], &rows)?;
    Ok(checks)
}
