//! Constant ledger for the a priori vorticity estimates and the stability
//! margin `σ`, together with the smallness thresholds on `‖f‖_{F^{1,1}}`.
//!
//! All constants depend on `|A_μ|` only. `C₅` carries a factor `1/x` and is
//! stored as the product `C₅·x`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstantsError {
    #[error("constant ledger invalid at x = {x}: {denominator} is not positive")]
    InvalidDomain { x: f64, denominator: &'static str },
}

/// Physical model: `TwoD` is a curve in the plane (one parameter), `ThreeD` a
/// surface in space (two parameters).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Model {
    TwoD,
    ThreeD,
}

impl Model {
    /// Parameter dimension of the interface.
    pub fn interface_dims(self) -> usize {
        match self {
            Model::TwoD => 1,
            Model::ThreeD => 2,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::TwoD => "2d",
            Model::ThreeD => "3d",
        })
    }
}

impl FromStr for Model {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "2d" => Ok(Model::TwoD),
            "3d" => Ok(Model::ThreeD),
            other => Err(format!("unknown model '{other}', expected 2d or 3d")),
        }
    }
}

/// Atwood numbers and analyticity rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluidParams {
    /// Viscosity contrast `(μ²−μ¹)/(μ²+μ¹)`, in `[-1, 1]`.
    pub a_mu: f64,
    /// Density contrast over viscosity sum; positive is the stable regime.
    pub a_rho: f64,
    pub nu: f64,
}

impl FluidParams {
    pub fn new(a_mu: f64, a_rho: f64) -> Self {
        Self { a_mu, a_rho, nu: 0.0 }
    }

    pub fn with_nu(self, nu: f64) -> Self {
        Self { nu, ..self }
    }

    pub fn is_stable(&self) -> bool {
        self.a_rho > 0.0
    }

    pub fn reversed(&self) -> Self {
        Self { a_rho: -self.a_rho, ..*self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantLedger {
    pub x: f64,
    pub a_mu: f64,
    pub s1: f64,
    pub s2: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    /// `C₅·x`.
    pub c5x: f64,
    pub b1: f64,
    pub b2: f64,
    pub valid: bool,
    pub failed_denominator: Option<&'static str>,
}

/// Evaluate every constant at `x = ‖f‖_{F^{1,1}}` and `a = |A_μ|`.
pub fn ledger(x: f64, a_mu_abs: f64) -> ConstantLedger {
    let a = a_mu_abs.abs();
    let x2 = x * x;
    let one_m_x2 = 1.0 - x2;
    let s1 = x / one_m_x2;
    let d5 = 1.0 - 5.0 * a * s1;
    let d8 = 1.0 - 8.0 * a * s1;
    let d2 = 1.0 - 2.0 * a * s1;
    let s2 = s1 / (1.0 - a * s1);
    let c1 = (1.0 - a * s1) / d5;
    let c2 = c1 / (d2 * one_m_x2);
    let b1 = d2 / d8;
    let c3 = (1.0 + x2) / one_m_x2 * (1.0 + a * 6.0 * x * (1.0 - a * s1) / (one_m_x2 * d2 * d5));
    let d3 = 1.0 - 3.0 * a * s2 * (1.0 + a * s2);
    let d6 = 1.0 - 6.0 * a * s2 * (1.0 + a * s2);
    let common = c3 + c1 + 4.0 * s1 * c1 * x;
    let c4 = (1.0 + s2 * s2 * a * a * common) / d3;
    let c5x = s2 * (3.0 + a * s2 * (3.0 + common)) / d3;
    let b2 = (1.0 + 2.0 * s2 * s2 * a * common) / d6;

    let checks: [(&'static str, f64); 6] = [
        ("1 - x^2", one_m_x2),
        ("1 - 5|A_mu| S1", d5),
        ("1 - 8|A_mu| S1", d8),
        ("1 - 2|A_mu| S1", d2),
        ("1 - 3|A_mu| S2 (1 + |A_mu| S2)", d3),
        ("1 - 6|A_mu| S2 (1 + |A_mu| S2)", d6),
    ];
    let failed = if x < 0.0 || !x.is_finite() {
        Some("x >= 0")
    } else {
        checks.iter().find(|(_, v)| !(*v > 0.0)).map(|(name, _)| *name)
    };
    ConstantLedger {
        x,
        a_mu: a,
        s1,
        s2,
        c1,
        c2,
        c3,
        c4,
        c5x,
        b1,
        b2,
        valid: failed.is_none(),
        failed_denominator: failed,
    }
}

impl ConstantLedger {
    fn require_valid(&self) -> Result<(), ConstantsError> {
        match self.failed_denominator {
            None => Ok(()),
            Some(d) => Err(ConstantsError::InvalidDomain { x: self.x, denominator: d }),
        }
    }
}

/// Stability margin for a surface in space. The condition for decay of
/// `‖f‖_{F^{1,1}_ν}` is `σ > 0`.
pub fn sigma3d(x: f64, a_mu_abs: f64, a_rho: f64, nu: f64) -> Result<f64, ConstantsError> {
    let l = ledger(x, a_mu_abs);
    l.require_valid()?;
    let a = l.a_mu;
    let x2 = x * x;
    let q = (1.0 - x2) * (1.0 - x2);
    // x³(2C₅ − 2C₅x²) written through C₅x.
    let c5_terms = 2.0 * x2 * l.c5x * (1.0 - x2);
    let bracket = 1.0
        - 2.0 * a * l.c5x
        - 2.0 * x2 * (2.0 * l.b1 + l.b2 - l.b2 * x2) / q
        - a * (12.0 * x2 * x * l.c2 + c5_terms) / q;
    Ok(-nu + a_rho * bracket)
}

/// Stability margin for a curve in the plane.
pub fn sigma2d(x: f64, a_mu_abs: f64, a_rho: f64, nu: f64) -> Result<f64, ConstantsError> {
    let a = a_mu_abs.abs();
    let x2 = x * x;
    let one_m_x2 = 1.0 - x2;
    let inner = one_m_x2 - 2.0 * a * x;
    if x < 0.0 || !x.is_finite() {
        return Err(ConstantsError::InvalidDomain { x, denominator: "x >= 0" });
    }
    if !(one_m_x2 > 0.0) {
        return Err(ConstantsError::InvalidDomain { x, denominator: "1 - x^2" });
    }
    if !(inner > 0.0) {
        return Err(ConstantsError::InvalidDomain { x, denominator: "1 - x^2 - 2|A_mu| x" });
    }
    let q = one_m_x2 * one_m_x2;
    let x4 = x2 * x2;
    let poly = 2.0 * a * x4 * x - 6.0 * x4 - 8.0 * a * x2 * x + 4.0 * x2 - 2.0 * a * x + 2.0;
    let bracket = 1.0 - 2.0 * x2 * (3.0 - x2) / q - a * 2.0 * x * poly / (q * inner * inner);
    Ok(a_rho * bracket - nu)
}

/// Margin of the given model.
pub fn sigma(model: Model, x: f64, a_mu_abs: f64, a_rho: f64, nu: f64) -> Result<f64, ConstantsError> {
    match model {
        Model::TwoD => sigma2d(x, a_mu_abs, a_rho, nu),
        Model::ThreeD => sigma3d(x, a_mu_abs, a_rho, nu),
    }
}

fn admissible(model: Model, x: f64, a: f64) -> bool {
    matches!(sigma(model, x, a, 1.0, 0.0), Ok(s) if s > 0.0)
}

const SCAN_STEP: f64 = 1e-3;
const BISECTION_TOL: f64 = 1e-12;

/// Largest `x*` with `σ(x) > 0` (and a valid ledger) on all of `[0, x*)`, for
/// `A_ρ = 1`, `ν = 0`. The margin is homogeneous in `A_ρ`, so the threshold
/// holds for every `A_ρ > 0`.
pub fn threshold(a_mu_abs: f64, model: Model) -> f64 {
    let a = a_mu_abs.abs();
    let mut lo = 0.0;
    let mut hi = SCAN_STEP;
    while admissible(model, hi, a) {
        lo = hi;
        hi += SCAN_STEP;
        debug_assert!(hi < 1.0, "margin stays positive up to x = 1");
    }
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if admissible(model, mid, a) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// One row of a threshold table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdPoint {
    pub a_mu: f64,
    pub threshold: f64,
    /// `σ(x*/2)` at `A_ρ = 1`, `ν = 0`.
    pub sigma_at_half: f64,
}

/// Threshold sampled at `samples` uniformly spaced `|A_μ| ∈ [0, 1]`.
pub fn threshold_curve(samples: usize, model: Model) -> Vec<ThresholdPoint> {
    assert!(samples >= 2, "threshold curve needs at least two samples");
    (0..samples)
        .map(|i| {
            let a = i as f64 / (samples - 1) as f64;
            let x = threshold(a, model);
            let half = sigma(model, 0.5 * x, a, 1.0, 0.0).expect("half threshold is admissible");
            ThresholdPoint { a_mu: a, threshold: x, sigma_at_half: half }
        })
        .collect()
}

/// Measured norms entering the a priori vorticity estimates.
///
/// For a curve in the plane, `omega2` holds `∂Ω` and `omega1`, `omega3` are
/// zero. `d_grad` is the larger of `‖∂_i 𝒟(Ω)‖` over the axes.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MeasuredNorms {
    pub omega1_f01: f64,
    pub omega2_f01: f64,
    pub omega3_f01: f64,
    pub d_grad_f01: f64,
    pub omega_jump_f11: f64,
    pub omega1_f11: f64,
    pub omega2_f11: f64,
    pub omega3_f11: f64,
    pub omega_jump_f21: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub measured: f64,
    pub bound: f64,
}

impl BoundCheck {
    pub fn ratio(&self) -> f64 {
        if self.bound > 0.0 {
            self.measured / self.bound
        } else if self.measured == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// Passes when the measurement is within `slack` (relative) of the bound.
    pub fn passes(&self, slack: f64) -> bool {
        self.measured <= self.bound * (1.0 + slack) + slack * f64::MIN_POSITIVE.sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub valid_ledger: bool,
    pub checks: Vec<BoundCheck>,
}

impl BoundReport {
    pub fn all_pass(&self, slack: f64) -> bool {
        self.valid_ledger && self.checks.iter().all(|c| c.passes(slack))
    }

    pub fn worst_ratio(&self) -> f64 {
        self.checks.iter().map(BoundCheck::ratio).fold(0.0, f64::max)
    }
}

/// Compare measured norms with the a priori estimates, at `x = ‖f‖_{F^{1,1}}`
/// and `f21 = ‖f‖_{F^{2,1}}`. Pass a ledger evaluated at the weighted norm
/// together with weighted measurements to check the analytic-weight version.
pub fn vorticity_bounds(l: &ConstantLedger, a_rho: f64, x: f64, f21: f64, m: &MeasuredNorms) -> BoundReport {
    let ar = a_rho.abs();
    let a = l.a_mu;
    let c5 = if x > 0.0 { l.c5x / x } else { 0.0 };
    let checks = vec![
        BoundCheck { name: "omega1 F01", measured: m.omega1_f01, bound: 2.0 * l.c1 * ar * x },
        BoundCheck { name: "omega2 F01", measured: m.omega2_f01, bound: 2.0 * l.c1 * ar * x },
        BoundCheck { name: "omega3 F01", measured: m.omega3_f01, bound: 12.0 * a * ar * l.c2 * x * x * x },
        BoundCheck { name: "grad D F01", measured: m.d_grad_f01, bound: 6.0 * ar * l.c2 * x * x },
        BoundCheck { name: "Omega F11", measured: m.omega_jump_f11, bound: 2.0 * ar * l.b1 * x },
        BoundCheck { name: "omega1 F11", measured: m.omega1_f11, bound: 2.0 * ar * l.c4 * f21 },
        BoundCheck { name: "omega2 F11", measured: m.omega2_f11, bound: 2.0 * ar * l.c4 * f21 },
        BoundCheck {
            name: "omega3 F11",
            measured: m.omega3_f11,
            bound: 4.0 * a * ar * x * x * f21 * (c5 + 3.0 * l.c2),
        },
        BoundCheck { name: "Omega F21", measured: m.omega_jump_f21, bound: 2.0 * ar * l.b2 * f21 },
    ];
    BoundReport { valid_ledger: l.valid, checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ledger_at_zero() {
        let l = ledger(0.0, 0.7);
        assert!(l.valid);
        assert_eq!((l.s1, l.s2, l.c1, l.b1, l.c5x), (0.0, 0.0, 1.0, 1.0, 0.0));
    }

    #[test]
    fn ledger_without_viscosity_jump() {
        let l = ledger(0.2, 0.0);
        assert!((l.s1 - 0.2 / 0.96).abs() < 1e-15);
        assert_eq!(l.s2, l.s1);
        assert_eq!((l.c1, l.b1), (1.0, 1.0));
    }

    #[test]
    fn invalid_ledger_names_denominator() {
        let l = ledger(0.5, 1.0);
        assert!(!l.valid);
        assert_eq!(l.failed_denominator, Some("1 - 5|A_mu| S1"));
        assert!(matches!(sigma3d(0.5, 1.0, 1.0, 0.0), Err(ConstantsError::InvalidDomain { .. })));
        assert!(sigma2d(1.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn margins_at_zero() {
        assert_eq!(sigma3d(0.0, 0.5, 1.0, 0.0).unwrap(), 1.0);
        assert_eq!(sigma2d(0.0, 0.3, 1.0, 0.0).unwrap(), 1.0);
        assert_eq!(sigma3d(0.0, 0.5, 2.0, 0.25).unwrap(), 1.75);
    }

    #[test]
    fn zero_data_meets_every_bound() {
        let l = ledger(0.0, 0.5);
        let r = vorticity_bounds(&l, 1.0, 0.0, 0.0, &MeasuredNorms::default());
        assert!(r.all_pass(0.0));
    }

    #[test]
    fn model_parsing() {
        assert_eq!("3D".parse::<Model>().unwrap(), Model::ThreeD);
        assert_eq!(Model::TwoD.to_string(), "2d");
        assert!("4d".parse::<Model>().is_err());
    }
}
