//! Right-hand side of the contour equation
//! `f_t = −A_ρ Λf + N₁ + N₂ + N₃` with `N₁ = (A_μ/2) Λ D(Ω)`, its heat-kernel
//! regularization, and an integrating-factor RK4 stepper that treats the
//! linear part exactly.

use thiserror::Error;

use crate::constants::{self, FluidParams, Model};
use crate::experiments::{RecordMeta, TrajectoryRecord, TrajectoryRow};
use crate::interface_ops::{InterfaceError, InterfaceOperator, PotentialJump, QuadratureScheme};
use crate::spectral::{self, NormSpec, SpectralError, SpectralInterface};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("blow-up detected at t = {time}: {reason}")]
    BlowUpDetected { time: f64, reason: String },
    #[error(transparent)]
    Interface(#[from] InterfaceError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("invalid stepper configuration: {0}")]
    InvalidConfig(String),
}

/// Coefficient of `A_ρ Λ` in the regularized system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LinearCoefficient {
    /// `A_ρ/2`, as written for the regularized system.
    #[default]
    Half,
    /// `A_ρ`, as in the unregularized equation.
    Full,
}

impl LinearCoefficient {
    pub fn value(self) -> f64 {
        match self {
            Self::Half => 0.5,
            Self::Full => 1.0,
        }
    }
}

/// Tolerances of the fixed-point solve for `Ω`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-13, max_iter: 300 }
    }
}

/// Spectra of the contributions to `f_t`. The nonlinear terms are truncated
/// to the dealiased band; the linear term is not, since the stepper treats it
/// exactly. `total` is the sum `linear + n1 + n2 (+ n3)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RhsBreakdown {
    pub linear: SpectralInterface,
    pub n1: SpectralInterface,
    pub n2: SpectralInterface,
    pub n3: Option<SpectralInterface>,
    pub total: SpectralInterface,
    pub jump: PotentialJump,
    /// Grid samples of `D(Ω)`, when `A_μ ≠ 0`.
    pub double_layer: Option<Vec<f64>>,
}

impl RhsBreakdown {
    /// `total − linear`.
    pub fn nonlinear(&self) -> SpectralInterface {
        let mut acc = self.n1.axpy(1.0, &self.n2).expect("same lattice");
        if let Some(n3) = &self.n3 {
            acc = acc.axpy(1.0, n3).expect("same lattice");
        }
        acc
    }
}

/// Heat-kernel multiplier `e^{−4π² ε |ξ|²}`.
pub fn mollifier_symbol(eps: f64, xi_abs: f64) -> f64 {
    (-4.0 * std::f64::consts::PI.powi(2) * eps * xi_abs * xi_abs).exp()
}

/// `ζ_ε ∗ f`.
pub fn mollify(f: &SpectralInterface, eps: f64) -> SpectralInterface {
    if eps == 0.0 {
        return f.clone();
    }
    f.map_radial(|r| mollifier_symbol(eps, r))
}

fn check_finite(s: &SpectralInterface) -> Result<(), DynamicsError> {
    if s.coeffs().iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
        Ok(())
    } else {
        Err(DynamicsError::BlowUpDetected { time: s.time(), reason: "non-finite right-hand side".into() })
    }
}

fn field_to_spectrum(f: &SpectralInterface, grid: &[f64]) -> Result<SpectralInterface, SpectralError> {
    SpectralInterface::from_grid(*f.lattice(), grid, f.time())
}

fn evaluate(
    f: &SpectralInterface,
    params: &FluidParams,
    scheme: &QuadratureScheme,
    opts: &SolverOptions,
    eps: f64,
    coefficient: f64,
) -> Result<RhsBreakdown, DynamicsError> {
    let g = mollify(&mollify(f, eps), eps);
    let op = InterfaceOperator::new(&g, scheme)?;
    let jump = op.solve_potential_jump(params, opts.tol, opts.max_iter)?;
    let frac = scheme.dealias_fraction;
    let outer = |s: SpectralInterface| mollify(&s, eps).dealias(frac);

    let linear = spectral::apply_lambda(&g).scale(-coefficient * params.a_rho);
    let (n1, double_layer) = if params.a_mu == 0.0 {
        (SpectralInterface::zeros(*f.lattice()).with_time(f.time()), None)
    } else {
        let d = op.double_layer(&jump.field)?;
        let ds = field_to_spectrum(f, &d)?;
        (outer(spectral::apply_lambda(&ds).scale(0.5 * params.a_mu)), Some(d))
    };
    let (v2, v3) = op.velocity_remainder(&jump)?;
    let n2 = outer(field_to_spectrum(f, &v2)?);
    let n3 = match v3 {
        Some(v) => Some(outer(field_to_spectrum(f, &v)?)),
        None => None,
    };
    let mut total = linear.axpy(1.0, &n1)?.axpy(1.0, &n2)?;
    if let Some(n3) = &n3 {
        total = total.axpy(1.0, n3)?;
    }
    check_finite(&total)?;
    Ok(RhsBreakdown { linear, n1, n2, n3, total, jump, double_layer })
}

/// Right-hand side of the contour equation.
pub fn rhs(f: &SpectralInterface, params: &FluidParams, scheme: &QuadratureScheme) -> Result<RhsBreakdown, DynamicsError> {
    rhs_with(f, params, scheme, &SolverOptions::default())
}

pub fn rhs_with(
    f: &SpectralInterface,
    params: &FluidParams,
    scheme: &QuadratureScheme,
    opts: &SolverOptions,
) -> Result<RhsBreakdown, DynamicsError> {
    evaluate(f, params, scheme, opts, 0.0, 1.0)
}

/// Right-hand side of the regularized system
/// `f_t = −c A_ρ Λ(ζ∗ζ∗f) + ζ ∗ N(ζ∗ζ∗f, Ω)` with `Ω` solved for the
/// mollified profile.
pub fn mollified_rhs(
    f: &SpectralInterface,
    params: &FluidParams,
    scheme: &QuadratureScheme,
    eps: f64,
    coefficient: LinearCoefficient,
) -> Result<RhsBreakdown, DynamicsError> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(DynamicsError::InvalidConfig(format!("mollifier eps = {eps} must be >= 0")));
    }
    evaluate(f, params, scheme, &SolverOptions::default(), eps, coefficient.value())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepperConfig {
    pub dt_max: f64,
    /// `dt <= cfl_c / ‖f‖_{F^{2,1}}`.
    pub cfl_c: f64,
    pub t_end: f64,
    pub mollifier_eps: f64,
    pub linear_coefficient: LinearCoefficient,
    /// Largest admissible `‖f‖_{F^{1,1}}`.
    pub blowup_threshold: f64,
    /// When false the nonlinear terms are dropped.
    pub nonlinear: bool,
    pub solver: SolverOptions,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            dt_max: 0.01,
            cfl_c: 0.25,
            t_end: 1.0,
            mollifier_eps: 0.0,
            linear_coefficient: LinearCoefficient::Half,
            blowup_threshold: 1.0,
            nonlinear: true,
            solver: SolverOptions::default(),
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let positive = [("dt_max", self.dt_max), ("cfl_c", self.cfl_c), ("blowup_threshold", self.blowup_threshold)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(DynamicsError::InvalidConfig(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(DynamicsError::InvalidConfig(format!("t_end = {} must be >= 0", self.t_end)));
        }
        if !(self.mollifier_eps >= 0.0 && self.mollifier_eps.is_finite()) {
            return Err(DynamicsError::InvalidConfig(format!("mollifier_eps = {} must be >= 0", self.mollifier_eps)));
        }
        Ok(())
    }

    /// Linear coefficient actually applied: the regularized coefficient only
    /// matters when the regularization is on.
    fn coefficient(&self) -> f64 {
        if self.mollifier_eps > 0.0 {
            self.linear_coefficient.value()
        } else {
            1.0
        }
    }
}

/// Evaluates the right-hand side for one fixed configuration.
struct Integrator<'a> {
    params: &'a FluidParams,
    scheme: &'a QuadratureScheme,
    cfg: &'a StepperConfig,
}

impl Integrator<'_> {
    fn breakdown(&self, f: &SpectralInterface) -> Result<RhsBreakdown, DynamicsError> {
        let x = spectral::wiener_norm(f, &NormSpec::wiener(1.0))?;
        if !(x <= self.cfg.blowup_threshold) {
            return Err(DynamicsError::BlowUpDetected {
                time: f.time(),
                reason: format!("slope norm {x} exceeds {}", self.cfg.blowup_threshold),
            });
        }
        let r = evaluate(f, self.params, self.scheme, &self.cfg.solver, self.cfg.mollifier_eps, self.cfg.coefficient());
        match r {
            Err(DynamicsError::Interface(InterfaceError::SlopeTooLarge { norm })) => Err(DynamicsError::BlowUpDetected {
                time: f.time(),
                reason: format!("mollified slope norm {norm} is not below 1"),
            }),
            other => other,
        }
    }

    fn nonlinear(&self, f: &SpectralInterface) -> Result<SpectralInterface, DynamicsError> {
        if !self.cfg.nonlinear {
            return Ok(SpectralInterface::zeros(*f.lattice()).with_time(f.time()));
        }
        Ok(self.breakdown(f)?.nonlinear())
    }

    /// Exponent `λ(ξ)` of the linear semigroup `e^{λ t}`.
    fn linear_rate(&self, r: f64) -> f64 {
        let m = mollifier_symbol(self.cfg.mollifier_eps, r);
        -self.cfg.coefficient() * self.params.a_rho * r * m * m
    }

    fn propagate(&self, f: &SpectralInterface, h: f64) -> SpectralInterface {
        f.map_radial(|r| (self.linear_rate(r) * h).exp())
    }

    fn choose_dt(&self, f: &SpectralInterface) -> Result<f64, DynamicsError> {
        let f21 = spectral::wiener_norm(f, &NormSpec::wiener(2.0))?;
        let mut dt = self.cfg.dt_max;
        if f21 > 0.0 {
            dt = dt.min(self.cfg.cfl_c / f21);
        }
        Ok(dt.min(self.cfg.t_end - f.time()))
    }

    /// One Lawson RK4 step of size `h`, given the nonlinear term at `f`.
    fn advance(&self, f: &SpectralInterface, k1: &SpectralInterface, h: f64) -> Result<SpectralInterface, DynamicsError> {
        let t = f.time();
        let half = 0.5 * h;
        let ef = self.propagate(f, half);
        let k2 = self.nonlinear(&self.propagate(&f.axpy(half, k1)?, half).with_time(t + half))?;
        let k3 = self.nonlinear(&ef.axpy(half, &k2)?.with_time(t + half))?;
        let k4 = self.nonlinear(&self.propagate(f, h).axpy(h, &self.propagate(&k3, half))?.with_time(t + h))?;
        let mid = self.propagate(&k2.axpy(1.0, &k3)?, half);
        let out = self
            .propagate(f, h)
            .axpy(h / 6.0, &self.propagate(k1, h))?
            .axpy(h / 3.0, &mid)?
            .axpy(h / 6.0, &k4)?
            .with_time(t + h);
        check_finite(&out)?;
        let x = spectral::wiener_norm(&out, &NormSpec::wiener(1.0))?;
        if !(x <= self.cfg.blowup_threshold) {
            return Err(DynamicsError::BlowUpDetected {
                time: out.time(),
                reason: format!("slope norm {x} exceeds {}", self.cfg.blowup_threshold),
            });
        }
        Ok(out)
    }
}

/// Advance `f` by exactly `dt`.
pub fn step_with_dt(
    f: &SpectralInterface,
    params: &FluidParams,
    scheme: &QuadratureScheme,
    cfg: &StepperConfig,
    dt: f64,
) -> Result<SpectralInterface, DynamicsError> {
    let it = Integrator { params, scheme, cfg };
    let k1 = it.nonlinear(f)?;
    it.advance(f, &k1, dt)
}

/// Advance `f` by one step of the CFL-limited size.
pub fn step(
    f: &SpectralInterface,
    params: &FluidParams,
    scheme: &QuadratureScheme,
    cfg: &StepperConfig,
) -> Result<SpectralInterface, DynamicsError> {
    cfg.validate()?;
    let it = Integrator { params, scheme, cfg };
    let dt = it.choose_dt(f)?;
    if dt <= 0.0 {
        return Ok(f.clone());
    }
    step_with_dt(f, params, scheme, cfg, dt)
}

/// Scalar state carried along a run besides the spectrum itself.
#[derive(Clone, Debug, PartialEq)]
pub struct RunState {
    pub f: SpectralInterface,
    pub step: u64,
    /// Margin `σ` used in the energy functional.
    pub sigma: f64,
    /// `∫₀ᵗ ‖f‖_{F^{2,1}_ν} dτ`, trapezoid rule over the steps taken.
    pub energy_integral: f64,
}

const STATE_NU: &str = "nu";
const STATE_SIGMA: &str = "sigma";
const STATE_INTEGRAL: &str = "energy_integral";
const STATE_STEP: &str = "step";

impl RunState {
    /// Fresh state at `f0`, with `σ` evaluated at `‖f₀‖_{F^{1,1}}` for the
    /// model and `params.nu`. Outside the admissible range `σ = 0`.
    pub fn start(f0: &SpectralInterface, params: &FluidParams, model: Model) -> Result<Self, DynamicsError> {
        let x0 = spectral::wiener_norm(f0, &NormSpec::wiener(1.0))?;
        let sigma = constants::sigma(model, x0, params.a_mu.abs(), params.a_rho, params.nu).unwrap_or(0.0);
        Ok(Self { f: f0.clone(), step: 0, sigma, energy_integral: 0.0 })
    }

    pub fn to_snapshot(&self, nu: f64) -> spectral::Snapshot {
        let mut snap = self.f.to_snapshot();
        snap.state.insert(STATE_NU.into(), nu);
        snap.state.insert(STATE_SIGMA.into(), self.sigma);
        snap.state.insert(STATE_INTEGRAL.into(), self.energy_integral);
        snap.state.insert(STATE_STEP.into(), self.step as f64);
        snap
    }

    /// Rebuild a state and its `ν` from a snapshot written by `to_snapshot`.
    pub fn from_snapshot(snap: &spectral::Snapshot) -> Result<(Self, f64), DynamicsError> {
        let f = snap.to_interface()?;
        let get = |k: &str| {
            snap.state
                .get(k)
                .copied()
                .ok_or_else(|| DynamicsError::InvalidConfig(format!("snapshot lacks run state '{k}'")))
        };
        let state = Self {
            f,
            step: get(STATE_STEP)? as u64,
            sigma: get(STATE_SIGMA)?,
            energy_integral: get(STATE_INTEGRAL)?,
        };
        Ok((state, get(STATE_NU)?))
    }
}

/// What `run` records.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub model: Model,
    /// Record a row every `record_stride` steps (and at the final time).
    pub record_stride: u64,
    /// Keep a spectrum every `snapshot_stride` steps; 0 disables.
    pub snapshot_stride: u64,
    /// Evaluate the a priori vorticity estimates at every recorded row.
    pub check_bounds: bool,
    /// Stop after this many steps, leaving the state resumable.
    pub max_steps: Option<u64>,
}

impl RunOptions {
    pub fn new(model: Model) -> Self {
        Self { model, record_stride: 1, snapshot_stride: 0, check_bounds: false, max_steps: None }
    }
}

pub mod flags {
    pub const BLOWUP: &str = "blowup";
    pub const NO_CONVERGENCE: &str = "no_convergence";
    pub const BOUND_VIOLATION: &str = "bound_violation";
    pub const OUTSIDE_THRESHOLD: &str = "outside_threshold";
}

/// Evolve `f0` to `stepper.t_end`.
pub fn run(
    f0: &SpectralInterface,
    params: &FluidParams,
    scheme: &QuadratureScheme,
    stepper: &StepperConfig,
    opts: &RunOptions,
) -> Result<TrajectoryRecord, DynamicsError> {
    let state = RunState::start(f0, params, opts.model)?;
    Ok(run_from(state, params, scheme, stepper, opts)?.0)
}

/// Continue a run from `state`. Returns the record of this segment and the
/// final state.
pub fn run_from(
    mut state: RunState,
    params: &FluidParams,
    scheme: &QuadratureScheme,
    stepper: &StepperConfig,
    opts: &RunOptions,
) -> Result<(TrajectoryRecord, RunState), DynamicsError> {
    stepper.validate()?;
    let it = Integrator { params, scheme, cfg: stepper };
    let mut record = TrajectoryRecord::new(RecordMeta::new(opts.model, state.f.lattice(), params, state.sigma, stepper));
    let stride = opts.record_stride.max(1);
    let mut taken = 0u64;
    let mut f21_prev = weighted(&state.f, params.nu, 2.0)?;
    loop {
        let at_end = state.f.time() >= stepper.t_end;
        let stopped = opts.max_steps.is_some_and(|m| taken >= m);
        let due = state.step.is_multiple_of(stride) || at_end;
        let needed = due || (stepper.nonlinear && !at_end && !stopped);
        let (bd, failed) = if needed {
            match it.breakdown(&state.f) {
                Ok(bd) => (Some(bd), false),
                Err(DynamicsError::BlowUpDetected { .. })
                | Err(DynamicsError::Interface(InterfaceError::NoConvergence { .. })) => (None, true),
                Err(e) => return Err(e),
            }
        } else {
            (None, false)
        };
        if due || failed {
            let mut row = TrajectoryRow::measure(&state, params, opts, scheme, bd.as_ref())?;
            if failed {
                row.add_flag(if spectral::wiener_norm(&state.f, &NormSpec::wiener(1.0))? > stepper.blowup_threshold {
                    flags::BLOWUP
                } else {
                    flags::NO_CONVERGENCE
                });
            }
            record.rows.push(row);
        }
        if opts.snapshot_stride > 0 && state.step.is_multiple_of(opts.snapshot_stride) {
            record.snapshots.push(state.to_snapshot(params.nu));
        }
        if at_end || stopped || failed {
            break;
        }
        let k1 = match (&bd, stepper.nonlinear) {
            (Some(bd), true) => bd.nonlinear(),
            _ => SpectralInterface::zeros(*state.f.lattice()).with_time(state.f.time()),
        };
        let dt = it.choose_dt(&state.f)?;
        let next = match it.advance(&state.f, &k1, dt) {
            Ok(next) => next,
            Err(DynamicsError::BlowUpDetected { .. }) => {
                if let Some(last) = record.rows.last_mut() {
                    last.add_flag(flags::BLOWUP);
                }
                break;
            }
            Err(DynamicsError::Interface(InterfaceError::NoConvergence { .. })) => {
                if let Some(last) = record.rows.last_mut() {
                    last.add_flag(flags::NO_CONVERGENCE);
                }
                break;
            }
            Err(e) => return Err(e),
        };
        let f21_next = weighted(&next, params.nu, 2.0)?;
        state.energy_integral += 0.5 * dt * (f21_prev + f21_next);
        f21_prev = f21_next;
        state.f = next;
        state.step += 1;
        taken += 1;
    }
    Ok((record, state))
}

/// `‖f‖_{F^{s,1}_ν}` at the time stored in `f`.
pub fn weighted(f: &SpectralInterface, nu: f64, s: f64) -> Result<f64, SpectralError> {
    spectral::wiener_norm(f, &NormSpec::wiener(s).weighted(nu, f.time()))
}

/// Exact linear evolution `f̂(k, t) = e^{−A_ρ|ξ|t} f̂(k, 0)`.
pub fn linear_solution(f0: &SpectralInterface, a_rho: f64, t: f64) -> SpectralInterface {
    f0.map_radial(|r| (-a_rho * r * t).exp()).with_time(f0.time() + t)
}
