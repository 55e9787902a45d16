//! Convergence of the heat-kernel regularization as `ε → 0`.

use crate::constants::{self, FluidParams, Model};
use crate::dynamics::{self, DynamicsError, LinearCoefficient, StepperConfig};
use crate::interface_ops::QuadratureScheme;
use crate::spectral::{self, Lattice, NormSpec, SpectralInterface};

use super::analytic_profile;

#[derive(Clone, Debug, PartialEq)]
pub struct MollifierConfig {
    pub n: usize,
    pub period: f64,
    pub params: FluidParams,
    /// `‖f₀‖_{F^{1,1}}` as a fraction of the threshold.
    pub size_fraction: f64,
    pub t_end: f64,
    pub dt_max: f64,
    pub cfl_c: f64,
    pub linear_coefficient: LinearCoefficient,
    pub eps: Vec<f64>,
}

impl Default for MollifierConfig {
    fn default() -> Self {
        Self {
            n: 256,
            period: 2.0 * std::f64::consts::PI,
            params: FluidParams::new(0.5, 1.0),
            size_fraction: 0.5,
            t_end: 0.5,
            dt_max: 0.01,
            cfl_c: 0.25,
            linear_coefficient: LinearCoefficient::Half,
            eps: vec![1e-2, 5e-3, 2.5e-3, 1.25e-3],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MollifierReport {
    /// `(ε, ‖f^ε − f^{ε'}‖_{F^{0,1}}(T))` for consecutive list entries.
    pub differences: Vec<(f64, f64)>,
    /// Slope of `log difference` against `log ε`.
    pub slope: f64,
    pub monotone: bool,
}

/// Solution of the regularized system at `cfg.t_end`, started from `ζ_ε ∗ f₀`.
pub fn mollified_solution(cfg: &MollifierConfig, f0: &SpectralInterface, eps: f64) -> Result<SpectralInterface, DynamicsError> {
    let scheme = QuadratureScheme::default();
    let stepper = StepperConfig {
        dt_max: cfg.dt_max,
        cfl_c: cfg.cfl_c,
        t_end: cfg.t_end,
        mollifier_eps: eps,
        linear_coefficient: cfg.linear_coefficient,
        ..StepperConfig::default()
    };
    let mut f = dynamics::mollify(f0, eps);
    while f.time() < stepper.t_end {
        f = dynamics::step(&f, &cfg.params, &scheme, &stepper)?;
    }
    Ok(f)
}

pub fn mollifier_cauchy_rate(cfg: &MollifierConfig) -> Result<MollifierReport, DynamicsError> {
    if cfg.eps.len() < 3 || cfg.eps.iter().any(|e| !(*e > 0.0)) {
        return Err(DynamicsError::InvalidConfig("need at least three positive eps values".into()));
    }
    let lat = Lattice::new(1, cfg.n, cfg.period)?;
    let target = cfg.size_fraction * constants::threshold(cfg.params.a_mu.abs(), Model::TwoD);
    let f0 = analytic_profile(lat, target);
    let runs = cfg.eps.iter().map(|&e| mollified_solution(cfg, &f0, e)).collect::<Result<Vec<_>, _>>()?;
    let mut differences = Vec::new();
    for (i, pair) in runs.windows(2).enumerate() {
        let d = spectral::wiener_norm(&pair[0].axpy(-1.0, &pair[1])?, &NormSpec::wiener(0.0))?;
        differences.push((cfg.eps[i], d));
    }
    let lx: Vec<f64> = differences.iter().map(|(e, _)| e.ln()).collect();
    let ly: Vec<f64> = differences.iter().map(|(_, d)| d.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let monotone = differences.windows(2).all(|w| w[1].1 <= w[0].1);
    Ok(MollifierReport { differences, slope: sxy / sxx, monotone })
}
