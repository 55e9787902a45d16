//! Kernels for a curve `y = f(x)` in the plane.
//!
//! With `z = β + iΔf`, `Δf = f(x) - f(x-β)`, the whole-line kernel `1/z`
//! summed over all periodic images is `P(z) = (π/L) cot(πz/L)`, so the
//! periodic cell integrals below are exact for periodic data. Both
//! integrands have removable singularities at `β = 0`:
//!
//! * double layer: `-(1/π) Im[(1 + i f'(x-β)) P(z)] Ω(x-β)`,
//!   limit `f''Ω / (2π(1 + f'²))`;
//! * velocity remainder: `(1/2π) (Re[(1 + i f'(x)) P(z)] - (π/L)cot(πβ/L)) ω(x-β)`,
//!   limit `f' f'' ω / (4π(1 + f'²))`.

use std::f64::consts::PI;

use super::{FarField, QuadratureScheme};
use crate::exec::{self, Execution};
use crate::spectral::Lattice;

pub(crate) struct CurveGeometry {
    pub f: Vec<f64>,
    pub df: Vec<f64>,
    pub d2f: Vec<f64>,
}

impl CurveGeometry {
    pub fn new(lattice: Lattice, f: Vec<f64>) -> Self {
        let df = lattice.grid_derivative(&f, 0);
        let d2f = lattice.grid_derivative(&df, 0);
        Self { f, df, d2f }
    }
}

/// One quadrature node: signed grid offset and trapezoid weight.
#[derive(Clone, Copy)]
struct Node {
    offset: i64,
    beta: f64,
    weight: f64,
    /// `sin(2πβ/L)` and `sin²(πβ/L)`
    sin2: f64,
    sin_sq: f64,
    /// `(π/L) cot(πβ/L)`
    cot: f64,
}

pub(crate) struct CurveQuadrature {
    far_field: FarField,
    fill: bool,
    exec: Execution,
    nodes: Vec<Node>,
    n: usize,
    period: f64,
}

fn wrap(i: usize, offset: i64, n: usize) -> usize {
    (i as i64 - offset).rem_euclid(n as i64) as usize
}

impl CurveQuadrature {
    pub fn new(lattice: &Lattice, scheme: &QuadratureScheme) -> Self {
        let n = lattice.modes();
        let h = lattice.spacing();
        let l = lattice.period();
        let mut nodes = Vec::new();
        match scheme.far_field {
            FarField::Periodized => {
                let half = (n / 2) as i64;
                for j in (-half + 1)..=half {
                    let beta = j as f64 * h;
                    let x = PI * beta / l;
                    let cot = if j == 0 { 0.0 } else { PI / l / x.tan() };
                    nodes.push(Node {
                        offset: j,
                        beta,
                        weight: h,
                        sin2: (2.0 * x).sin(),
                        sin_sq: x.sin().powi(2),
                        cot,
                    });
                }
            }
            FarField::Window => {
                let half = (scheme.window_periods * n / 2) as i64;
                for j in -half..=half {
                    let w = if j.abs() == half { 0.5 * h } else { h };
                    let beta = j as f64 * h;
                    let cot = if j == 0 { 0.0 } else { 1.0 / beta };
                    nodes.push(Node { offset: j, beta, weight: w, sin2: 0.0, sin_sq: 0.0, cot });
                }
            }
        }
        Self { far_field: scheme.far_field, fill: scheme.singular_fill, exec: scheme.execution, nodes, n, period: l }
    }

    /// `(Re P, Im P)` at node `nd` for height difference `dh`.
    #[inline]
    fn kernel(&self, nd: &Node, dh: f64) -> (f64, f64) {
        match self.far_field {
            FarField::Periodized => {
                let c = PI / self.period;
                let y = c * dh;
                let e = y.exp_m1();
                let sinh = e * (e + 2.0) / (2.0 * (e + 1.0));
                let cosh = sinh + 1.0 / (e + 1.0);
                let den = 2.0 * (sinh * sinh + nd.sin_sq);
                (c * nd.sin2 / den, -c * 2.0 * sinh * cosh / den)
            }
            FarField::Window => {
                let den = nd.beta * nd.beta + dh * dh;
                (nd.beta / den, -dh / den)
            }
        }
    }

    /// Weight of `Ω(x_i - β)` in the double layer at target `i`, for node `nd`.
    #[inline]
    fn double_layer_weight(&self, g: &CurveGeometry, i: usize, nd: &Node) -> f64 {
        if nd.offset == 0 {
            if !self.fill {
                return 0.0;
            }
            let s = g.df[i];
            return nd.weight * g.d2f[i] / (2.0 * PI * (1.0 + s * s));
        }
        let src = wrap(i, nd.offset, self.n);
        let (pr, pi) = self.kernel(nd, g.f[i] - g.f[src]);
        -nd.weight / PI * (pi + g.df[src] * pr)
    }

    /// Dense weights for repeated double-layer application, or `None` when
    /// the matrix exceeds `budget_bytes`.
    pub fn double_layer_matrix(&self, g: &CurveGeometry, budget_bytes: usize) -> Option<Vec<f64>> {
        let m = self.nodes.len();
        if self.n.saturating_mul(m).saturating_mul(8) > budget_bytes {
            return None;
        }
        let rows = exec::map_range(self.n, self.exec, |i| {
            self.nodes.iter().map(|nd| self.double_layer_weight(g, i, nd)).collect::<Vec<_>>()
        });
        Some(rows.concat())
    }

    pub fn apply_matrix(&self, matrix: &[f64], omega: &[f64]) -> Vec<f64> {
        let m = self.nodes.len();
        exec::map_range(self.n, self.exec, |i| {
            let row = &matrix[i * m..(i + 1) * m];
            let mut acc = 0.0;
            for (w, nd) in row.iter().zip(&self.nodes) {
                acc += w * omega[wrap(i, nd.offset, self.n)];
            }
            acc
        })
    }

    pub fn double_layer(&self, g: &CurveGeometry, omega: &[f64]) -> Vec<f64> {
        exec::map_range(self.n, self.exec, |i| {
            let mut acc = 0.0;
            for nd in &self.nodes {
                acc += self.double_layer_weight(g, i, nd) * omega[wrap(i, nd.offset, self.n)];
            }
            acc
        })
    }

    /// Velocity remainder `N₂` driven by the vorticity `ω = ∂Ω`.
    pub fn velocity_remainder(&self, g: &CurveGeometry, vort: &[f64]) -> Vec<f64> {
        exec::map_range(self.n, self.exec, |i| {
            let slope = g.df[i];
            let mut acc = 0.0;
            for nd in &self.nodes {
                if nd.offset == 0 {
                    if self.fill {
                        acc += nd.weight * slope * g.d2f[i] * vort[i] / (4.0 * PI * (1.0 + slope * slope));
                    }
                    continue;
                }
                let src = wrap(i, nd.offset, self.n);
                let (pr, pi) = self.kernel(nd, g.f[i] - g.f[src]);
                acc += nd.weight / (2.0 * PI) * (pr - slope * pi - nd.cot) * vort[src];
            }
            acc
        })
    }
}
