//! Flat `key = value` run configuration.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::constants::Model;
use crate::dynamics::LinearCoefficient;
use crate::exec::Execution;
use crate::interface_ops::{FarField, FlatRoute};

use super::ConfigError;

/// Experiment selected by the CLI subcommand or the `experiment` key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Constants,
    Simulate,
    Reverse,
    Decay,
    Contraction,
    Mollifier,
    Staircase,
    Sweep,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Self::Constants,
        Self::Simulate,
        Self::Reverse,
        Self::Decay,
        Self::Contraction,
        Self::Mollifier,
        Self::Staircase,
        Self::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Constants => "constants",
            Self::Simulate => "simulate",
            Self::Reverse => "reverse",
            Self::Decay => "decay",
            Self::Contraction => "contraction",
            Self::Mollifier => "mollifier",
            Self::Staircase => "staircase",
            Self::Sweep => "sweep",
        }
    }

    /// Keys that must appear in the file for this experiment.
    fn required(self) -> &'static [&'static str] {
        match self {
            Self::Constants => &["model"],
            Self::Staircase => &[],
            _ => &["model", "n", "a_mu", "a_rho"],
        }
    }
}

impl FromStr for Experiment {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment '{s}'"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub model: Model,
    pub n: usize,
    pub period: f64,
    pub a_mu: f64,
    pub a_rho: f64,
    pub nu_fraction: f64,
    pub dt_max: f64,
    pub cfl_c: f64,
    pub t_end: f64,
    pub mollifier_eps: f64,
    pub linear_coefficient: LinearCoefficient,
    pub window_periods: usize,
    pub singular_fill: bool,
    pub far_field: FarField,
    pub flat_route: FlatRoute,
    pub execution: Execution,
    pub snapshot_stride: u64,
    pub record_stride: u64,
    pub check_bounds: bool,
    pub out_dir: String,
    /// `‖f₀‖_{F^{1,1}}` as a fraction of the threshold.
    pub size_fraction: f64,
    /// Checkpoint to resume from; empty for a fresh run.
    pub resume: String,
    /// Amplitude of the perturbation `g₀ − f₀` in the contraction run.
    pub perturbation: f64,
    pub delta: f64,
    pub amplitude: f64,
    pub eps_list: Vec<f64>,
    pub spectral_power: f64,
    pub spectral_width: f64,
    pub fit_t1: f64,
    pub fit_t2: f64,
    pub sigma_exp: f64,
    pub delta_exp: f64,
    pub gamma_exp: f64,
    pub s_target: f64,
    pub n_shells: u64,
    pub tail_start: u64,
    pub samples: usize,
    pub sweep_a_mu: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Simulate,
            model: Model::TwoD,
            n: 256,
            period: 2.0 * std::f64::consts::PI,
            a_mu: 0.0,
            a_rho: 1.0,
            nu_fraction: 0.1,
            dt_max: 0.01,
            cfl_c: 0.25,
            t_end: 1.0,
            mollifier_eps: 0.0,
            linear_coefficient: LinearCoefficient::Half,
            window_periods: 1,
            singular_fill: true,
            far_field: FarField::Periodized,
            flat_route: FlatRoute::Spectral,
            execution: Execution::default(),
            snapshot_stride: 0,
            record_stride: 1,
            check_bounds: true,
            out_dir: "out".into(),
            size_fraction: 0.8,
            resume: String::new(),
            perturbation: 1e-4,
            delta: 0.1,
            amplitude: 1e-3,
            eps_list: vec![1e-2, 5e-3, 2.5e-3, 1.25e-3],
            spectral_power: 0.45,
            spectral_width: 2.0,
            fit_t1: 5.0,
            fit_t2: 50.0,
            sigma_exp: 2.0,
            delta_exp: 1.0,
            gamma_exp: 4.5,
            s_target: 0.25,
            n_shells: 1_000_000,
            tail_start: 1000,
            samples: 21,
            sweep_a_mu: vec![0.0, 0.5, 1.0],
        }
    }
}

/// Every accepted key, in serialization order.
pub const KEYS: [&str; 39] = [
    "experiment",
    "model",
    "n",
    "period",
    "a_mu",
    "a_rho",
    "nu_fraction",
    "dt_max",
    "cfl_c",
    "t_end",
    "mollifier_eps",
    "linear_coefficient",
    "window_periods",
    "singular_fill",
    "far_field",
    "flat_route",
    "execution",
    "snapshot_stride",
    "record_stride",
    "check_bounds",
    "out_dir",
    "size_fraction",
    "resume",
    "perturbation",
    "delta",
    "amplitude",
    "eps_list",
    "spectral_power",
    "spectral_width",
    "fit_t1",
    "fit_t2",
    "sigma_exp",
    "delta_exp",
    "gamma_exp",
    "s_target",
    "n_shells",
    "tail_start",
    "samples",
    "sweep_a_mu",
];

fn bad(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue { key: key.to_string(), reason: reason.into() }
}

fn real(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v.parse().map_err(|_| bad(key, format!("'{v}' is not a number")))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad(key, "must be finite"))
    }
}

fn positive(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x = real(key, v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(bad(key, "must be positive"))
    }
}

fn non_negative(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x = real(key, v)?;
    if x >= 0.0 {
        Ok(x)
    } else {
        Err(bad(key, "must be non-negative"))
    }
}

fn integer(key: &str, v: &str) -> Result<u64, ConfigError> {
    v.parse().map_err(|_| bad(key, format!("'{v}' is not a non-negative integer")))
}

fn boolean(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad(key, format!("'{v}' is not a boolean"))),
    }
}

fn list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|p| real(key, p.trim())).collect()
}

fn format_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "experiment" => self.experiment = v.parse().map_err(|e: String| bad(key, e))?,
            "model" => self.model = v.parse().map_err(|e: String| bad(key, e))?,
            "n" => {
                let n = integer(key, v)? as usize;
                if n < 4 || !n.is_power_of_two() {
                    return Err(bad(key, "must be a power of two >= 4"));
                }
                self.n = n;
            }
            "period" => self.period = positive(key, v)?,
            "a_mu" => {
                let a = real(key, v)?;
                if !(-1.0..=1.0).contains(&a) {
                    return Err(bad(key, "outside [-1,1]"));
                }
                self.a_mu = a;
            }
            "a_rho" => {
                let a = real(key, v)?;
                if a == 0.0 {
                    return Err(bad(key, "must be nonzero"));
                }
                self.a_rho = a;
            }
            "nu_fraction" => self.nu_fraction = non_negative(key, v)?,
            "dt_max" => self.dt_max = positive(key, v)?,
            "cfl_c" => self.cfl_c = positive(key, v)?,
            "t_end" => self.t_end = non_negative(key, v)?,
            "mollifier_eps" => self.mollifier_eps = non_negative(key, v)?,
            "linear_coefficient" => {
                self.linear_coefficient = match v {
                    "half" => LinearCoefficient::Half,
                    "full" => LinearCoefficient::Full,
                    _ => return Err(bad(key, "expected half or full")),
                }
            }
            "window_periods" => {
                let m = integer(key, v)?;
                if m == 0 || m % 2 == 0 {
                    return Err(bad(key, "must be an odd integer >= 1"));
                }
                self.window_periods = m as usize;
            }
            "singular_fill" => self.singular_fill = boolean(key, v)?,
            "far_field" => {
                self.far_field = match v {
                    "periodized" => FarField::Periodized,
                    "window" => FarField::Window,
                    _ => return Err(bad(key, "expected periodized or window")),
                }
            }
            "flat_route" => {
                self.flat_route = match v {
                    "spectral" => FlatRoute::Spectral,
                    "lattice" => FlatRoute::LatticeKernel,
                    _ => return Err(bad(key, "expected spectral or lattice")),
                }
            }
            "execution" => {
                self.execution = match v {
                    "parallel" => Execution::Parallel,
                    "sequential" => Execution::Sequential,
                    _ => return Err(bad(key, "expected parallel or sequential")),
                }
            }
            "snapshot_stride" => self.snapshot_stride = integer(key, v)?,
            "record_stride" => {
                self.record_stride = integer(key, v)?;
                if self.record_stride == 0 {
                    return Err(bad(key, "must be >= 1"));
                }
            }
            "check_bounds" => self.check_bounds = boolean(key, v)?,
            "out_dir" => {
                if v.is_empty() {
                    return Err(bad(key, "must not be empty"));
                }
                self.out_dir = v.to_string();
            }
            "size_fraction" => self.size_fraction = positive(key, v)?,
            "resume" => self.resume = v.to_string(),
            "perturbation" => self.perturbation = real(key, v)?,
            "delta" => self.delta = positive(key, v)?,
            "amplitude" => self.amplitude = positive(key, v)?,
            "eps_list" => {
                let l = list(key, v)?;
                if l.len() < 3 || l.iter().any(|e| *e <= 0.0) {
                    return Err(bad(key, "need at least three positive values"));
                }
                self.eps_list = l;
            }
            "spectral_power" => self.spectral_power = real(key, v)?,
            "spectral_width" => self.spectral_width = positive(key, v)?,
            "fit_t1" => self.fit_t1 = positive(key, v)?,
            "fit_t2" => self.fit_t2 = positive(key, v)?,
            "sigma_exp" => self.sigma_exp = real(key, v)?,
            "delta_exp" => self.delta_exp = real(key, v)?,
            "gamma_exp" => self.gamma_exp = real(key, v)?,
            "s_target" => self.s_target = real(key, v)?,
            "n_shells" => self.n_shells = integer(key, v)?,
            "tail_start" => self.tail_start = integer(key, v)?,
            "samples" => {
                self.samples = integer(key, v)? as usize;
                if self.samples < 2 {
                    return Err(bad(key, "must be >= 2"));
                }
            }
            "sweep_a_mu" => {
                let l = list(key, v)?;
                if l.iter().any(|a| !(-1.0..=1.0).contains(a)) {
                    return Err(bad(key, "values outside [-1,1]"));
                }
                self.sweep_a_mu = l;
            }
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> String {
        let lc = |c: LinearCoefficient| match c {
            LinearCoefficient::Half => "half",
            LinearCoefficient::Full => "full",
        };
        match key {
            "experiment" => self.experiment.name().into(),
            "model" => self.model.to_string(),
            "n" => self.n.to_string(),
            "period" => format!("{:?}", self.period),
            "a_mu" => format!("{:?}", self.a_mu),
            "a_rho" => format!("{:?}", self.a_rho),
            "nu_fraction" => format!("{:?}", self.nu_fraction),
            "dt_max" => format!("{:?}", self.dt_max),
            "cfl_c" => format!("{:?}", self.cfl_c),
            "t_end" => format!("{:?}", self.t_end),
            "mollifier_eps" => format!("{:?}", self.mollifier_eps),
            "linear_coefficient" => lc(self.linear_coefficient).into(),
            "window_periods" => self.window_periods.to_string(),
            "singular_fill" => self.singular_fill.to_string(),
            "far_field" => match self.far_field {
                FarField::Periodized => "periodized".into(),
                FarField::Window => "window".into(),
            },
            "flat_route" => match self.flat_route {
                FlatRoute::Spectral => "spectral".into(),
                FlatRoute::LatticeKernel => "lattice".into(),
            },
            "execution" => match self.execution {
                Execution::Parallel => "parallel".into(),
                Execution::Sequential => "sequential".into(),
            },
            "snapshot_stride" => self.snapshot_stride.to_string(),
            "record_stride" => self.record_stride.to_string(),
            "check_bounds" => self.check_bounds.to_string(),
            "out_dir" => self.out_dir.clone(),
            "size_fraction" => format!("{:?}", self.size_fraction),
            "resume" => self.resume.clone(),
            "perturbation" => format!("{:?}", self.perturbation),
            "delta" => format!("{:?}", self.delta),
            "amplitude" => format!("{:?}", self.amplitude),
            "eps_list" => format_list(&self.eps_list),
            "spectral_power" => format!("{:?}", self.spectral_power),
            "spectral_width" => format!("{:?}", self.spectral_width),
            "fit_t1" => format!("{:?}", self.fit_t1),
            "fit_t2" => format!("{:?}", self.fit_t2),
            "sigma_exp" => format!("{:?}", self.sigma_exp),
            "delta_exp" => format!("{:?}", self.delta_exp),
            "gamma_exp" => format!("{:?}", self.gamma_exp),
            "s_target" => format!("{:?}", self.s_target),
            "n_shells" => self.n_shells.to_string(),
            "tail_start" => self.tail_start.to_string(),
            "samples" => self.samples.to_string(),
            "sweep_a_mu" => format_list(&self.sweep_a_mu),
            _ => String::new(),
        }
    }

    /// Every key with its resolved value, one `key = value` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key));
        }
        out
    }

    fn check_consistency(&self) -> Result<(), ConfigError> {
        if self.fit_t2 <= self.fit_t1 {
            return Err(bad("fit_t2", "must exceed fit_t1"));
        }
        let two_d_only = matches!(self.experiment, Experiment::Reverse | Experiment::Decay | Experiment::Mollifier);
        if two_d_only && self.model != Model::TwoD {
            return Err(bad("model", format!("experiment {} runs in 2d only", self.experiment.name())));
        }
        Ok(())
    }
}

/// Parse a configuration whose experiment comes from the `experiment` key
/// (default `simulate`).
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_for(text, None)
}

/// Parse a configuration, with `experiment` overriding the file's selector.
pub fn parse_config_for(text: &str, experiment: Option<Experiment>) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut seen: Vec<String> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax { line: lineno + 1, text: raw.to_string() });
        };
        let (key, value) = (key.trim(), value.trim());
        if seen.iter().any(|k| k == key) {
            return Err(bad(key, "given more than once"));
        }
        cfg.set(key, value)?;
        seen.push(key.to_string());
    }
    if let Some(e) = experiment {
        cfg.experiment = e;
    }
    for key in cfg.experiment.required() {
        if !seen.iter().any(|k| k == key) {
            return Err(ConfigError::MissingRequired(key.to_string()));
        }
    }
    cfg.check_consistency()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "model=2d\nn=256\na_mu=0.5\na_rho=1.0";

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.n, 256);
        assert_eq!(c.a_mu, 0.5);
        assert_eq!(c.cfl_c, 0.25);
        assert_eq!(c.window_periods, 1);
    }

    #[test]
    fn a_mu_out_of_range() {
        let e = parse_config("model=2d\nn=256\na_mu=1.5\na_rho=1.0").unwrap_err();
        assert_eq!(e, ConfigError::BadValue { key: "a_mu".into(), reason: "outside [-1,1]".into() });
    }

    #[test]
    fn unknown_and_missing_keys() {
        assert_eq!(parse_config("colour=blue").unwrap_err(), ConfigError::UnknownKey("colour".into()));
        assert_eq!(parse_config("model=2d\nn=64\na_rho=1").unwrap_err(), ConfigError::MissingRequired("a_mu".into()));
    }

    #[test]
    fn comments_and_whitespace() {
        let c = parse_config("# header\n model = 3d # surface\nn=32\na_mu=-0.25\na_rho=2\n\n").unwrap();
        assert_eq!(c.model, Model::ThreeD);
        assert_eq!(c.a_mu, -0.25);
    }

    #[test]
    fn serialization_round_trip() {
        let c = parse_config(&format!("{MINIMAL}\neps_list=0.1,0.05,0.025\nperiod=3.7")).unwrap();
        let again = parse_config(&c.to_text()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.to_text(), again.to_text());
    }
}
