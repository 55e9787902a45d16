//! Nonlocal interface operators: the double-layer potential `D(Ω)`, the
//! implicit equation `Ω = A_μ D(Ω) − 2A_ρ f`, the vorticity amplitudes, the
//! Birkhoff–Rott integrals and the nonlinear velocity remainders.
//!
//! Curves (`dims = 1`) are handled by `plane`, surfaces (`dims = 2`) by
//! `surface`. Fields are real grid samples in the storage order of
//! [`Lattice`].

pub mod lattice_sums;
mod plane;
mod surface;

use std::sync::OnceLock;

use thiserror::Error;

use crate::constants::FluidParams;
use crate::exec::{self, Execution};
use crate::spectral::{self, Lattice, NormSpec, SpectralError, SpectralInterface};

use plane::{CurveGeometry, CurveQuadrature};
use surface::{BirkhoffRottKernel, DoubleLayerKernel, Part, Stencil, SurfaceGeometry, SurfaceQuadrature, VelocityKernel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterfaceError {
    #[error("slope norm {norm} is not below 1")]
    SlopeTooLarge { norm: f64 },
    #[error("field length does not match the interface grid")]
    GridMismatch,
    #[error("fixed-point iteration did not converge in {max_iter} steps (residual {residual})")]
    NoConvergence { max_iter: usize, residual: f64 },
    #[error("operation needs a two-parameter surface")]
    RequiresSurface,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// How the far field of each kernel is handled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FarField {
    /// Sum over every periodic image: exact kernels for curves, and for
    /// surfaces the bilinear part handled exactly with the remainder summed
    /// over the window.
    #[default]
    Periodized,
    /// Whole-line kernels summed over `window_periods` periods.
    Window,
}

/// How the bilinear (`G = 1`) part of a surface kernel is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FlatRoute {
    /// Fourier multipliers (`Λ`, Riesz transforms) and commutators.
    #[default]
    Spectral,
    /// Lattice quadrature against the periodized kernels.
    LatticeKernel,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureScheme {
    pub window_periods: usize,
    pub singular_fill: bool,
    pub dealias_fraction: f64,
    pub far_field: FarField,
    pub flat_route: FlatRoute,
    pub execution: Execution,
    /// Largest dense double-layer matrix kept between fixed-point iterations.
    pub matrix_budget_bytes: usize,
}

impl Default for QuadratureScheme {
    fn default() -> Self {
        Self {
            window_periods: 1,
            singular_fill: true,
            dealias_fraction: 2.0 / 3.0,
            far_field: FarField::Periodized,
            flat_route: FlatRoute::Spectral,
            execution: Execution::default(),
            matrix_budget_bytes: 256 << 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialJump {
    pub field: Vec<f64>,
    pub iterations: usize,
    pub contraction_ratio: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum VorticityAmplitude {
    Curve { omega: Vec<f64> },
    Surface { omega1: Vec<f64>, omega2: Vec<f64>, omega3: Vec<f64> },
}

impl VorticityAmplitude {
    pub fn is_zero(&self) -> bool {
        match self {
            Self::Curve { omega } => omega.iter().all(|v| *v == 0.0),
            Self::Surface { omega1, omega2, omega3 } => {
                omega1.iter().chain(omega2).chain(omega3).all(|v| *v == 0.0)
            }
        }
    }
}

/// `Σ_k |ξ|^s |ĝ(k)|` for a grid field, the mean included when `s = 0`.
pub fn field_norm(lattice: &Lattice, values: &[f64], s: f64) -> f64 {
    let coeffs = lattice.forward(values);
    let terms: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let r = lattice.xi_abs(idx);
            if s == 0.0 {
                c.norm()
            } else if r == 0.0 {
                0.0
            } else {
                r.powf(s) * c.norm()
            }
        })
        .collect();
    exec::tree_sum(&terms)
}

enum Engine {
    Curve { geom: CurveGeometry, quad: CurveQuadrature },
    Surface { geom: SurfaceGeometry, quad: SurfaceQuadrature, window: Stencil, cell: Option<Stencil> },
}

/// All operators attached to one interface, with cached geometry and, for
/// repeated double-layer application, a dense weight matrix.
pub struct InterfaceOperator {
    lattice: Lattice,
    scheme: QuadratureScheme,
    engine: Engine,
    matrix: OnceLock<Option<Vec<f64>>>,
}

impl InterfaceOperator {
    pub fn new(f: &SpectralInterface, scheme: &QuadratureScheme) -> Result<Self, InterfaceError> {
        let norm = spectral::wiener_norm(f, &NormSpec::wiener(1.0))?;
        if norm >= 1.0 {
            return Err(InterfaceError::SlopeTooLarge { norm });
        }
        let lattice = *f.lattice();
        let grid = f.to_grid();
        let engine = if lattice.dims() == 1 {
            Engine::Curve { geom: CurveGeometry::new(lattice, grid), quad: CurveQuadrature::new(&lattice, scheme) }
        } else {
            let exact_flat = scheme.far_field == FarField::Periodized;
            let cell = (exact_flat && scheme.flat_route == FlatRoute::LatticeKernel)
                .then(|| Stencil::periodic_cell(&lattice));
            Engine::Surface {
                geom: SurfaceGeometry::new(lattice, grid),
                quad: SurfaceQuadrature::new(&lattice, scheme.singular_fill, scheme.execution),
                window: Stencil::window(&lattice, scheme.window_periods.max(1)),
                cell,
            }
        };
        Ok(Self { lattice, scheme: *scheme, engine, matrix: OnceLock::new() })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn scheme(&self) -> &QuadratureScheme {
        &self.scheme
    }

    /// Kernel split used for the windowed sum of a surface integrand.
    fn window_part(&self) -> Part {
        match self.scheme.far_field {
            FarField::Periodized => Part::Rest,
            FarField::Window => Part::Full,
        }
    }

    fn check_len(&self, v: &[f64]) -> Result<(), InterfaceError> {
        if v.len() == self.lattice.len() {
            Ok(())
        } else {
            Err(InterfaceError::GridMismatch)
        }
    }

    fn gradient(&self, v: &[f64]) -> [Vec<f64>; 2] {
        [self.lattice.grid_derivative(v, 0), self.lattice.grid_derivative(v, 1)]
    }

    /// `Λ(f g) − f Λg` on the grid.
    fn commutator(&self, f: &[f64], g: &[f64]) -> Vec<f64> {
        let fg: Vec<f64> = f.iter().zip(g).map(|(a, b)| a * b).collect();
        let lfg = self.lattice.grid_lambda(&fg);
        let lg = self.lattice.grid_lambda(g);
        lfg.iter().zip(f.iter().zip(&lg)).map(|(a, (b, c))| a - b * c).collect()
    }

    fn surface_flat_double_layer(&self, geom: &SurfaceGeometry, omega: &[f64]) -> Vec<f64> {
        let lat = &self.lattice;
        let mut out = self.commutator(&geom.f, omega);
        for axis in 0..2 {
            let prod: Vec<f64> = omega.iter().zip(&geom.grad[axis]).map(|(a, b)| a * b).collect();
            let r = lat.grid_riesz(&prod, axis);
            for (o, v) in out.iter_mut().zip(&r) {
                *o -= v;
            }
        }
        out
    }

    /// `D(Ω)` at every grid point. Uses the dense matrix once a solve has
    /// built it.
    pub fn double_layer(&self, omega: &[f64]) -> Result<Vec<f64>, InterfaceError> {
        self.check_len(omega)?;
        if let Some(Some(_)) = self.matrix.get() {
            return self.double_layer_fast(omega);
        }
        self.double_layer_direct(omega)
    }

    fn double_layer_direct(&self, omega: &[f64]) -> Result<Vec<f64>, InterfaceError> {
        Ok(match &self.engine {
            Engine::Curve { geom, quad } => quad.double_layer(geom, omega),
            Engine::Surface { geom, quad, window, cell } => {
                let grad = self.gradient(omega);
                let dg = [[grad[0].as_slice(), grad[1].as_slice()]];
                let rest = quad.sweep(geom, window, &DoubleLayerKernel(self.window_part()), &[omega], &dg);
                let mut out: Vec<f64> = rest.into_iter().map(|v| v[0]).collect();
                if self.scheme.far_field == FarField::Periodized {
                    let flat = match cell {
                        Some(cell) => quad
                            .sweep(geom, cell, &DoubleLayerKernel(Part::Flat), &[omega], &dg)
                            .into_iter()
                            .map(|v| v[0])
                            .collect(),
                        None => self.surface_flat_double_layer(geom, omega),
                    };
                    for (o, v) in out.iter_mut().zip(&flat) {
                        *o += v;
                    }
                }
                out
            }
        })
    }

    fn cached_matrix(&self) -> Option<&Vec<f64>> {
        self.matrix
            .get_or_init(|| match &self.engine {
                Engine::Curve { geom, quad } => quad.double_layer_matrix(geom, self.scheme.matrix_budget_bytes),
                Engine::Surface { geom, quad, window, cell } => {
                    let n = self.lattice.len();
                    let width = window.len() + 3 + cell.as_ref().map_or(0, |c| c.len() + 3);
                    if n.saturating_mul(width).saturating_mul(8) > self.scheme.matrix_budget_bytes {
                        return None;
                    }
                    let mut m = quad.matrix(geom, window, &DoubleLayerKernel(self.window_part()));
                    if let Some(cell) = cell {
                        m.extend(quad.matrix(geom, cell, &DoubleLayerKernel(Part::Flat)));
                    }
                    Some(m)
                }
            })
            .as_ref()
    }

    /// `D(Ω)` through the cached matrix when it fits the budget.
    fn double_layer_fast(&self, omega: &[f64]) -> Result<Vec<f64>, InterfaceError> {
        let Some(m) = self.cached_matrix() else {
            return self.double_layer_direct(omega);
        };
        Ok(match &self.engine {
            Engine::Curve { quad, .. } => quad.apply_matrix(m, omega),
            Engine::Surface { geom, quad, window, cell } => {
                let grad = self.gradient(omega);
                let g = [grad[0].as_slice(), grad[1].as_slice()];
                let split = self.lattice.len() * (window.len() + 3);
                let mut out = quad.apply_matrix(window, &m[..split], omega, g);
                if self.scheme.far_field == FarField::Periodized {
                    let flat = match cell {
                        Some(cell) => quad.apply_matrix(cell, &m[split..], omega, g),
                        None => self.surface_flat_double_layer(geom, omega),
                    };
                    for (o, v) in out.iter_mut().zip(&flat) {
                        *o += v;
                    }
                }
                out
            }
        })
    }

    /// Fixed-point solution of `Ω = A_μ D(Ω) − 2A_ρ f`.
    pub fn solve_potential_jump(
        &self,
        params: &FluidParams,
        tol: f64,
        max_iter: usize,
    ) -> Result<PotentialJump, InterfaceError> {
        let f = match &self.engine {
            Engine::Curve { geom, .. } => &geom.f,
            Engine::Surface { geom, .. } => &geom.f,
        };
        let source: Vec<f64> = f.iter().map(|v| -2.0 * params.a_rho * v).collect();
        if params.a_mu == 0.0 {
            return Ok(PotentialJump { field: source, iterations: 1, contraction_ratio: 0.0, residual: 0.0 });
        }
        let lat = &self.lattice;
        let mut omega = source.clone();
        let mut prev_diff = f64::NAN;
        let mut ratio: f64 = 0.0;
        let mut residual = f64::INFINITY;
        for it in 1..=max_iter.max(1) {
            let d = self.double_layer_fast(&omega)?;
            let next: Vec<f64> = d.iter().zip(&source).map(|(dv, s)| params.a_mu * dv + s).collect();
            let diff: Vec<f64> = next.iter().zip(&omega).map(|(a, b)| a - b).collect();
            let dn = field_norm(lat, &diff, 0.0);
            let on = field_norm(lat, &omega, 0.0);
            if !dn.is_finite() {
                return Err(InterfaceError::NoConvergence { max_iter: it, residual: dn });
            }
            // Ratios taken once the update sits at roundoff are noise.
            if prev_diff.is_finite() && prev_diff > 1e-13 * (1.0 + on) {
                ratio = ratio.max(dn / prev_diff);
            }
            prev_diff = dn;
            omega = next;
            residual = dn / (1.0 + on);
            if dn < tol * (1.0 + on) {
                return Ok(PotentialJump { field: omega, iterations: it, contraction_ratio: ratio, residual: dn });
            }
        }
        Err(InterfaceError::NoConvergence { max_iter, residual })
    }

    pub fn vorticity(&self, jump: &PotentialJump) -> Result<VorticityAmplitude, InterfaceError> {
        self.check_len(&jump.field)?;
        let f = match &self.engine {
            Engine::Curve { geom, .. } => &geom.f,
            Engine::Surface { geom, .. } => &geom.f,
        };
        Ok(vorticity_fields(&self.lattice, f, &jump.field))
    }

    /// `(BR₁, BR₂, BR₃)` for a surface.
    pub fn birkhoff_rott(&self, w: &VorticityAmplitude) -> Result<[Vec<f64>; 3], InterfaceError> {
        let (Engine::Surface { geom, quad, window, cell }, VorticityAmplitude::Surface { omega1, omega2, omega3 }) =
            (&self.engine, w)
        else {
            return Err(InterfaceError::RequiresSurface);
        };
        for v in [omega1, omega2, omega3] {
            self.check_len(v)?;
        }
        let dens = [omega1.as_slice(), omega2.as_slice(), omega3.as_slice()];
        let grads: Vec<[Vec<f64>; 2]> = dens.iter().map(|v| self.gradient(v)).collect();
        let dg: Vec<[&[f64]; 2]> = grads.iter().map(|g| [g[0].as_slice(), g[1].as_slice()]).collect();
        let rest = quad.sweep(geom, window, &BirkhoffRottKernel(self.window_part()), &dens, &dg);
        let mut out = [vec![0.0; rest.len()], vec![0.0; rest.len()], vec![0.0; rest.len()]];
        for (i, v) in rest.iter().enumerate() {
            for c in 0..3 {
                out[c][i] = v[c];
            }
        }
        if self.scheme.far_field == FarField::Periodized {
            let flat: [Vec<f64>; 3] = match cell {
                Some(cell) => {
                    let v = quad.sweep(geom, cell, &BirkhoffRottKernel(Part::Flat), &dens, &dg);
                    std::array::from_fn(|c| v.iter().map(|x| x[c]).collect())
                }
                None => {
                    let lat = &self.lattice;
                    let r1w3 = lat.grid_riesz(omega3, 0);
                    let r2w3 = lat.grid_riesz(omega3, 1);
                    let c2 = self.commutator(&geom.f, omega2);
                    let c1 = self.commutator(&geom.f, omega1);
                    let r1w2 = lat.grid_riesz(omega2, 0);
                    let r2w1 = lat.grid_riesz(omega1, 1);
                    let n = lat.len();
                    [
                        (0..n).map(|i| -0.5 * r2w3[i] + 0.5 * c2[i]).collect(),
                        (0..n).map(|i| 0.5 * r1w3[i] - 0.5 * c1[i]).collect(),
                        (0..n).map(|i| -0.5 * (r1w2[i] - r2w1[i])).collect(),
                    ]
                }
            };
            for c in 0..3 {
                for (o, v) in out[c].iter_mut().zip(&flat[c]) {
                    *o += v;
                }
            }
        }
        Ok(out)
    }

    /// Nonlinear velocity remainders `(N₂, N₃)`; `N₃` is absent for curves.
    /// Together with `−A_ρΛf + (A_μ/2)ΛD(Ω)` they form the normal velocity.
    pub fn velocity_remainder(&self, jump: &PotentialJump) -> Result<(Vec<f64>, Option<Vec<f64>>), InterfaceError> {
        let w = self.vorticity(jump)?;
        match (&self.engine, &w) {
            (Engine::Curve { geom, quad }, VorticityAmplitude::Curve { omega }) => {
                Ok((quad.velocity_remainder(geom, omega), None))
            }
            (Engine::Surface { geom, quad, window, cell }, VorticityAmplitude::Surface { omega3, .. }) => {
                let lat = &self.lattice;
                let [p1, p2] = self.gradient(&jump.field);
                let dens = [p1.as_slice(), p2.as_slice(), omega3.as_slice()];
                let grads: Vec<[Vec<f64>; 2]> = dens.iter().map(|v| self.gradient(v)).collect();
                let dg: Vec<[&[f64]; 2]> = grads.iter().map(|g| [g[0].as_slice(), g[1].as_slice()]).collect();
                let rest = quad.sweep(geom, window, &VelocityKernel(self.window_part()), &dens, &dg);
                let mut n2: Vec<f64> = rest.iter().map(|v| v[0]).collect();
                let mut n3: Vec<f64> = rest.iter().map(|v| v[1]).collect();
                if self.scheme.far_field == FarField::Periodized {
                    let (f2, f3): (Vec<f64>, Vec<f64>) = match cell {
                        Some(cell) => {
                            let v = quad.sweep(geom, cell, &VelocityKernel(Part::Flat), &dens, &dg);
                            v.iter().map(|x| (x[0], x[1])).unzip()
                        }
                        None => {
                            let c1 = self.commutator(&geom.f, &p1);
                            let c2 = self.commutator(&geom.f, &p2);
                            let r1 = lat.grid_riesz(omega3, 0);
                            let r2 = lat.grid_riesz(omega3, 1);
                            let g = &geom.grad;
                            (0..lat.len())
                                .map(|i| {
                                    (
                                        0.5 * (g[0][i] * c1[i] + g[1][i] * c2[i]),
                                        0.5 * (-g[1][i] * r1[i] + g[0][i] * r2[i]),
                                    )
                                })
                                .unzip()
                        }
                    };
                    for i in 0..lat.len() {
                        n2[i] += f2[i];
                        n3[i] += f3[i];
                    }
                }
                Ok((n2, Some(n3)))
            }
            _ => unreachable!("vorticity shape always matches the engine"),
        }
    }
}

pub fn double_layer(
    f: &SpectralInterface,
    omega: &[f64],
    scheme: &QuadratureScheme,
) -> Result<Vec<f64>, InterfaceError> {
    InterfaceOperator::new(f, scheme)?.double_layer(omega)
}

pub fn solve_potential_jump(
    f: &SpectralInterface,
    params: &FluidParams,
    scheme: &QuadratureScheme,
    tol: f64,
    max_iter: usize,
) -> Result<PotentialJump, InterfaceError> {
    InterfaceOperator::new(f, scheme)?.solve_potential_jump(params, tol, max_iter)
}

pub fn vorticity(f: &SpectralInterface, jump: &PotentialJump) -> Result<VorticityAmplitude, InterfaceError> {
    let lat = f.lattice();
    if jump.field.len() != lat.len() {
        return Err(InterfaceError::GridMismatch);
    }
    let grid = f.to_grid();
    Ok(vorticity_fields(lat, &grid, &jump.field))
}

fn vorticity_fields(lat: &Lattice, f: &[f64], omega: &[f64]) -> VorticityAmplitude {
    if lat.dims() == 1 {
        return VorticityAmplitude::Curve { omega: lat.grid_derivative(omega, 0) };
    }
    let d1 = lat.grid_derivative(omega, 0);
    let d2 = lat.grid_derivative(omega, 1);
    let f1 = lat.grid_derivative(f, 0);
    let f2 = lat.grid_derivative(f, 1);
    let omega3 = (0..lat.len()).map(|i| d2[i] * f1[i] - d1[i] * f2[i]).collect();
    VorticityAmplitude::Surface { omega1: d2, omega2: d1.iter().map(|v| -v).collect(), omega3 }
}

pub fn birkhoff_rott(
    f: &SpectralInterface,
    w: &VorticityAmplitude,
    scheme: &QuadratureScheme,
) -> Result<[Vec<f64>; 3], InterfaceError> {
    InterfaceOperator::new(f, scheme)?.birkhoff_rott(w)
}
