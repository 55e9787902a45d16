//! Intermediate-time algebraic decay on a long period. The data have a
//! spectrum `|ξ|^{−p} e^{−w|ξ|}` near `ξ = 0`, which on a torus of period
//! `L` behaves like the whole-line problem for `t ≪ L / (2π A_ρ)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::constants::{self, FluidParams, Model};
use crate::dynamics::{self, DynamicsError, StepperConfig};
use crate::interface_ops::QuadratureScheme;
use crate::spectral::{self, Lattice, NormSpec, SpectralInterface};

use super::fit::{fit_decay, DecayFit, FitError};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayConfig {
    pub n: usize,
    pub period: f64,
    pub params: FluidParams,
    /// `‖f₀‖_{F^{1,1}}` as a fraction of the threshold.
    pub size_fraction: f64,
    pub spectral_power: f64,
    pub spectral_width: f64,
    pub t_end: f64,
    pub dt_max: f64,
    pub cfl_c: f64,
    pub window: (f64, f64),
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            n: 2048,
            period: 512.0 * PI,
            params: FluidParams::new(0.0, 1.0),
            size_fraction: 0.8,
            spectral_power: 0.45,
            spectral_width: 2.0,
            t_end: 50.0,
            dt_max: 0.5,
            cfl_c: 0.25,
            window: (5.0, 50.0),
        }
    }
}

impl DecayConfig {
    pub fn initial_data(&self) -> Result<SpectralInterface, DynamicsError> {
        let lat = Lattice::new(1, self.n, self.period)?;
        let coeffs: Vec<Complex64> = (0..lat.len())
            .map(|i| {
                let xi = lat.xi_abs(i);
                if xi == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                Complex64::new(xi.powf(-self.spectral_power) * (-self.spectral_width * xi).exp(), 0.0)
            })
            .collect();
        let f = SpectralInterface::from_coeffs(lat, coeffs, 0.0)?;
        let x = spectral::wiener_norm(&f, &NormSpec::wiener(1.0))?;
        let target = self.size_fraction * constants::threshold(self.params.a_mu.abs(), Model::TwoD);
        Ok(f.scale(target / x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecaySample {
    pub t: f64,
    pub f11: f64,
    pub h1: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport {
    pub samples: Vec<DecaySample>,
    pub f11_fit: Result<DecayFit, FitError>,
    pub h1_fit: Result<DecayFit, FitError>,
}

pub fn decay_experiment(cfg: &DecayConfig) -> Result<DecayReport, DynamicsError> {
    let scheme = QuadratureScheme::default();
    let stepper = StepperConfig { dt_max: cfg.dt_max, cfl_c: cfg.cfl_c, t_end: cfg.t_end, ..StepperConfig::default() };
    let mut f = cfg.initial_data()?;
    let mut samples = Vec::new();
    loop {
        samples.push(DecaySample {
            t: f.time(),
            f11: spectral::wiener_norm(&f, &NormSpec::wiener(1.0))?,
            h1: spectral::sobolev_norm(&f, &NormSpec::sobolev(1.0))?,
        });
        if f.time() >= cfg.t_end {
            break;
        }
        f = dynamics::step(&f, &cfg.params, &scheme, &stepper)?;
    }
    let t: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let f11: Vec<f64> = samples.iter().map(|s| s.f11).collect();
    let h1: Vec<f64> = samples.iter().map(|s| s.h1).collect();
    Ok(DecayReport { f11_fit: fit_decay(&t, &f11, cfg.window), h1_fit: fit_decay(&t, &h1, cfg.window), samples })
}
