//! Backward solutions of the unstable problem: run the stable problem
//! forward for a time `δ`, then flip the sign of `A_ρ` and run forward again.
//! The second run retraces the first backwards, so it starts from analytic
//! data and returns to `f₀`, while every mode grows at the unstable linear
//! rate.

use std::f64::consts::PI;

use crate::constants::FluidParams;
use crate::dynamics::{self, DynamicsError, StepperConfig};
use crate::interface_ops::QuadratureScheme;
use crate::spectral::{self, Lattice, NormSpec, SpectralInterface};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReversalConfig {
    pub n: usize,
    pub period: f64,
    pub params: FluidParams,
    pub delta: f64,
    /// Coefficient scale: mode `k ≤ N/8` carries `amplitude / k²`.
    pub amplitude: f64,
    pub dt_max: f64,
    pub cfl_c: f64,
}

impl Default for ReversalConfig {
    fn default() -> Self {
        Self {
            n: 256,
            period: 2.0 * PI,
            params: FluidParams::new(0.0, 1.0),
            delta: 0.1,
            amplitude: 1e-3,
            dt_max: 0.005,
            cfl_c: 0.25,
        }
    }
}

impl ReversalConfig {
    pub fn initial_data(&self) -> Result<SpectralInterface, DynamicsError> {
        let lat = Lattice::new(1, self.n, self.period)?;
        let top = self.n / 8;
        let w = 2.0 * PI / self.period;
        Ok(SpectralInterface::from_fn(lat, |x| {
            (1..=top).map(|k| self.amplitude / (k * k) as f64 * ((k as f64) * w * x[0] + 0.4 * k as f64).cos()).sum()
        }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeGrowth {
    pub k: i64,
    pub measured_rate: f64,
    pub linear_rate: f64,
}

impl ModeGrowth {
    pub fn relative_error(&self) -> f64 {
        (self.measured_rate / self.linear_rate - 1.0).abs()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReversalReport {
    /// `‖f̃(δ) − f₀‖_{F^{0,1}}`.
    pub recovery_error: f64,
    /// `(s, ‖f̃(δ)‖_{Ḣ^s} / ‖f̃(0)‖_{Ḣ^s})` for `s = 1, 2`.
    pub hs_growth: Vec<(f64, f64)>,
    /// Growth rates of the reversed run for `1 ≤ k ≤ N/8`.
    pub modes: Vec<ModeGrowth>,
    pub worst_rate_error: f64,
    pub blowup: bool,
}

fn evolve(
    f: &SpectralInterface,
    params: &FluidParams,
    scheme: &QuadratureScheme,
    stepper: &StepperConfig,
) -> Result<SpectralInterface, DynamicsError> {
    let mut f = f.clone();
    while f.time() < stepper.t_end {
        f = dynamics::step(&f, params, scheme, stepper)?;
    }
    Ok(f)
}

pub fn time_reversal_illposedness(cfg: &ReversalConfig) -> Result<ReversalReport, DynamicsError> {
    if !(cfg.delta > 0.0) || !(cfg.params.a_rho > 0.0) {
        return Err(DynamicsError::InvalidConfig("reversal needs delta > 0 and a stable A_rho > 0".into()));
    }
    let f0 = cfg.initial_data()?;
    let scheme = QuadratureScheme::default();
    let stepper = StepperConfig { dt_max: cfg.dt_max, cfl_c: cfg.cfl_c, t_end: cfg.delta, ..StepperConfig::default() };
    let forward = evolve(&f0, &cfg.params, &scheme, &stepper)?;
    let start = forward.clone().with_time(0.0);
    let reversed = cfg.params.reversed();
    let (back, blowup) = match evolve(&start, &reversed, &scheme, &stepper) {
        Ok(b) => (b, false),
        Err(DynamicsError::BlowUpDetected { .. }) => {
            return Ok(ReversalReport {
                recovery_error: f64::INFINITY,
                hs_growth: Vec::new(),
                modes: Vec::new(),
                worst_rate_error: f64::INFINITY,
                blowup: true,
            })
        }
        Err(e) => return Err(e),
    };
    let recovery_error = spectral::wiener_norm(&back.axpy(-1.0, &f0)?, &NormSpec::wiener(0.0))?;
    let mut hs_growth = Vec::new();
    for s in [1.0, 2.0] {
        let a = spectral::sobolev_norm(&start, &NormSpec::sobolev(s))?;
        let b = spectral::sobolev_norm(&back, &NormSpec::sobolev(s))?;
        hs_growth.push((s, b / a));
    }
    let lat = f0.lattice();
    let elapsed = back.time() - start.time();
    let modes: Vec<ModeGrowth> = (1..=(cfg.n / 8) as i64)
        .map(|k| {
            let a = start.coeff([k, 0]).norm();
            let b = back.coeff([k, 0]).norm();
            let xi = lat.xi_abs(lat.flat_index([k, 0]));
            ModeGrowth { k, measured_rate: (b / a).ln() / elapsed, linear_rate: -reversed.a_rho * xi }
        })
        .collect();
    let worst_rate_error = modes.iter().map(ModeGrowth::relative_error).fold(0.0, f64::max);
    Ok(ReversalReport { recovery_error, hs_growth, modes, worst_rate_error, blowup })
}
