//! Kernels for a surface `z = f(x₁, x₂)` in space.
//!
//! Every integrand has the form `A(β)·G(Δ)/|β|²` with `Δ = (f(x) - f(x-β))/|β|`
//! and `G = (1 + Δ²)^{-3/2}`. The operators are split as
//! `G = 1 + (G - 1)`: the `G = 1` part is bilinear and is evaluated either
//! with Fourier multipliers or by quadrature against periodized lattice
//! kernels; the `G - 1` part decays like `|β|^{-4}` and is summed over a
//! window of whole periods.
//!
//! Near `β = 0` each integrand expands into homogeneous terms whose parities
//! alternate with the degree. Symmetric lattice sums cancel the odd terms, and
//! the even `1/|β|` term is corrected with the square-lattice constants,
//! leaving an `O(h³)` error.

use std::f64::consts::PI;

use super::lattice_sums::{PeriodicKernels, SINGULAR_CORRECTION};
use crate::exec::{self, Execution};
use crate::spectral::Lattice;

pub(crate) struct SurfaceGeometry {
    pub f: Vec<f64>,
    pub grad: [Vec<f64>; 2],
    /// `∂₁₁f`, `∂₁₂f`, `∂₂₂f`
    pub hess: [Vec<f64>; 3],
}

impl SurfaceGeometry {
    pub fn new(lattice: Lattice, f: Vec<f64>) -> Self {
        let g1 = lattice.grid_derivative(&f, 0);
        let g2 = lattice.grid_derivative(&f, 1);
        let h11 = lattice.grid_derivative(&g1, 0);
        let h12 = lattice.grid_derivative(&g1, 1);
        let h22 = lattice.grid_derivative(&g2, 1);
        Self { f, grad: [g1, g2], hess: [h11, h12, h22] }
    }
}

/// Which piece of an integrand a kernel evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Part {
    /// The whole integrand, `G` included.
    Full,
    /// `G` replaced by `G - 1`.
    Rest,
    /// `G` replaced by 1, with `1/|β|³` and `β/|β|³` taken from the
    /// periodized lattice kernels.
    Flat,
}

/// Local data for one source–target pair.
pub(crate) struct Pair {
    pub bhat: [f64; 2],
    pub inv_r: f64,
    /// `f(x) - f(x - β)`
    pub dh: f64,
    pub grad_t: [f64; 2],
    pub grad_s: [f64; 2],
    /// `Σ_n |β+nL|^{-3}` and `Σ_n (β+nL)/|β+nL|³` (or their `n = 0` terms).
    pub k3: f64,
    pub kv: [f64; 2],
}

impl Pair {
    #[inline]
    fn slope(&self) -> f64 {
        self.dh * self.inv_r
    }

    /// `G`, `G - 1` or 1 depending on `part`.
    #[inline]
    fn weight(&self, part: Part) -> f64 {
        let d = self.slope();
        let t = 1.0 / (1.0 + d * d);
        match part {
            Part::Full => t * t.sqrt(),
            Part::Rest => t * t.sqrt() - 1.0,
            Part::Flat => 1.0,
        }
    }
}

pub(crate) trait SurfaceKernel<const C: usize>: Sync {
    fn eval(&self, p: &Pair, dens: &[f64]) -> [f64; C];
}

/// `(1/2π) (Δ - β̂·∇f(x-β)) G Ω(x-β) / |β|²`
pub(crate) struct DoubleLayerKernel(pub Part);

impl SurfaceKernel<1> for DoubleLayerKernel {
    #[inline]
    fn eval(&self, p: &Pair, d: &[f64]) -> [f64; 1] {
        let c = 0.5 / PI;
        match self.0 {
            Part::Flat => [c * (p.dh * p.k3 - p.kv[0] * p.grad_s[0] - p.kv[1] * p.grad_s[1]) * d[0]],
            part => {
                let num = p.slope() - p.bhat[0] * p.grad_s[0] - p.bhat[1] * p.grad_s[1];
                [c * num * p.weight(part) * d[0] * p.inv_r * p.inv_r]
            }
        }
    }
}

/// Birkhoff–Rott components from `(ω₁, ω₂, ω₃)` at the source.
pub(crate) struct BirkhoffRottKernel(pub Part);

impl SurfaceKernel<3> for BirkhoffRottKernel {
    #[inline]
    fn eval(&self, p: &Pair, w: &[f64]) -> [f64; 3] {
        let c = -0.25 / PI;
        let (a, b, s) = match self.0 {
            Part::Flat => (p.kv, p.dh * p.k3, 1.0),
            part => {
                let s = p.weight(part) * p.inv_r * p.inv_r;
                (p.bhat, p.slope(), s)
            }
        };
        [
            c * s * (a[1] * w[2] - b * w[1]),
            c * s * (b * w[0] - a[0] * w[2]),
            c * s * (a[0] * w[1] - a[1] * w[0]),
        ]
    }
}

/// Velocity remainders `(N₂, N₃)` from `(∂₁Ω, ∂₂Ω, ω₃)` at the source.
pub(crate) struct VelocityKernel(pub Part);

impl SurfaceKernel<2> for VelocityKernel {
    #[inline]
    fn eval(&self, p: &Pair, d: &[f64]) -> [f64; 2] {
        let c = 0.25 / PI;
        let perp = [-p.grad_t[1], p.grad_t[0]];
        let dot_t = p.grad_t[0] * d[0] + p.grad_t[1] * d[1];
        match self.0 {
            Part::Flat => [c * p.dh * p.k3 * dot_t, c * (p.kv[0] * perp[0] + p.kv[1] * perp[1]) * d[2]],
            part => {
                let g = p.weight(part);
                let s = p.inv_r * p.inv_r;
                let dir = p.bhat[0] * d[0] + p.bhat[1] * d[1];
                let n2 = match part {
                    Part::Full => (dir + p.slope() * dot_t) * g - dir,
                    _ => (dir + p.slope() * dot_t) * g,
                };
                let n3 = (p.bhat[0] * perp[0] + p.bhat[1] * perp[1]) * d[2] * g;
                [c * n2 * s, c * n3 * s]
            }
        }
    }
}

#[derive(Clone, Copy)]
struct Node {
    off: [i64; 2],
    bhat: [f64; 2],
    inv_r: f64,
    weight: f64,
    k3: f64,
    kv: [f64; 2],
}

/// A punctured, symmetric set of lattice offsets with trapezoid weights.
pub(crate) struct Stencil {
    nodes: Vec<Node>,
    h: f64,
}

impl Stencil {
    /// Offsets `|j|_∞ <= M N/2`, edge weights halved (corners quartered).
    pub fn window(lattice: &Lattice, periods: usize) -> Self {
        let n = lattice.modes();
        let h = lattice.spacing();
        let half = (periods * n / 2) as i64;
        let mut nodes = Vec::with_capacity(((2 * half + 1) * (2 * half + 1)) as usize);
        for a in -half..=half {
            for b in -half..=half {
                if a == 0 && b == 0 {
                    continue;
                }
                let wa = if a.abs() == half { 0.5 } else { 1.0 };
                let wb = if b.abs() == half { 0.5 } else { 1.0 };
                let beta = [a as f64 * h, b as f64 * h];
                let r = beta[0].hypot(beta[1]);
                let inv3 = 1.0 / (r * r * r);
                nodes.push(Node {
                    off: [a, b],
                    bhat: [beta[0] / r, beta[1] / r],
                    inv_r: 1.0 / r,
                    weight: wa * wb * h * h,
                    k3: inv3,
                    kv: [beta[0] * inv3, beta[1] * inv3],
                });
            }
        }
        Self { nodes, h }
    }

    /// One periodic cell centred on the origin, carrying the periodized
    /// kernels. The cell edge shared by `±N/2` is split evenly between the
    /// two sides so the node set stays symmetric.
    pub fn periodic_cell(lattice: &Lattice) -> Self {
        let n = lattice.modes();
        let h = lattice.spacing();
        let l = lattice.period();
        let kernels = PeriodicKernels::new(l);
        let half = (n / 2) as i64;
        let mut nodes = Vec::with_capacity(n * n + 2 * n + 1);
        for a in -half..=half {
            for b in -half..=half {
                if a == 0 && b == 0 {
                    continue;
                }
                let wa = if a.abs() == half { 0.5 } else { 1.0 };
                let wb = if b.abs() == half { 0.5 } else { 1.0 };
                let beta = [a as f64 * h, b as f64 * h];
                let r = beta[0].hypot(beta[1]);
                let (k3, kv) = kernels.eval(beta, l, false);
                nodes.push(Node {
                    off: [a, b],
                    bhat: [beta[0] / r, beta[1] / r],
                    inv_r: 1.0 / r,
                    weight: wa * wb * h * h,
                    k3,
                    kv,
                });
            }
        }
        Self { nodes, h }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }
}

/// Local Taylor data at a target point.
struct Jet {
    f: f64,
    grad: [f64; 2],
    hess: [f64; 3],
}

const CORRECTION_ANGLES: usize = 48;
const PROBE_RADIUS: f64 = 1e-3;

pub(crate) struct SurfaceQuadrature {
    n: usize,
    exec: Execution,
    fill: bool,
    cos_table: Vec<[f64; 5]>,
}

#[inline]
fn wrap(i: usize, off: i64, n: usize) -> usize {
    (i as i64 - off).rem_euclid(n as i64) as usize
}

impl SurfaceQuadrature {
    pub fn new(lattice: &Lattice, fill: bool, exec: Execution) -> Self {
        let cos_table = (0..CORRECTION_ANGLES)
            .map(|k| {
                let th = PI * k as f64 / CORRECTION_ANGLES as f64;
                let mut row = [0.0; 5];
                for (slot, (m, _)) in row.iter_mut().zip(SINGULAR_CORRECTION.iter()) {
                    *slot = (*m as f64 * th).cos();
                }
                row
            })
            .collect();
        Self { n: lattice.modes(), exec, fill, cos_table }
    }

    fn jet(g: &SurfaceGeometry, i: usize) -> Jet {
        Jet {
            f: g.f[i],
            grad: [g.grad[0][i], g.grad[1][i]],
            hess: [g.hess[0][i], g.hess[1][i], g.hess[2][i]],
        }
    }

    /// `h Σ_m c_m b̂_m`, where `b(θ)` is the `1/|β|` coefficient of the
    /// even part of the integrand, read off a local Taylor model of `f` and
    /// the densities on a small circle.
    fn correction<K: SurfaceKernel<C>, const C: usize>(
        &self,
        kernel: &K,
        jet: &Jet,
        dens: &[f64],
        dens_grad: &[[f64; 2]],
        h: f64,
    ) -> [f64; C] {
        let r = PROBE_RADIUS * h;
        let channels = dens.len();
        let mut local = vec![0.0; channels];
        let mut coef = [[0.0; C]; 5];
        for (k, cosines) in self.cos_table.iter().enumerate() {
            let th = PI * k as f64 / CORRECTION_ANGLES as f64;
            let u = [th.cos(), th.sin()];
            let mut b = [0.0; C];
            for sign in [1.0, -1.0] {
                let e = [sign * u[0], sign * u[1]];
                let beta = [r * e[0], r * e[1]];
                let hb = [
                    jet.hess[0] * beta[0] + jet.hess[1] * beta[1],
                    jet.hess[1] * beta[0] + jet.hess[2] * beta[1],
                ];
                let lin = jet.grad[0] * beta[0] + jet.grad[1] * beta[1];
                let quad = 0.5 * (beta[0] * hb[0] + beta[1] * hb[1]);
                let fs = jet.f - lin + quad;
                for c in 0..channels {
                    local[c] = dens[c] - dens_grad[c][0] * beta[0] - dens_grad[c][1] * beta[1];
                }
                let inv3 = 1.0 / (r * r * r);
                let pair = Pair {
                    bhat: e,
                    inv_r: 1.0 / r,
                    dh: jet.f - fs,
                    grad_t: jet.grad,
                    grad_s: [jet.grad[0] - hb[0], jet.grad[1] - hb[1]],
                    k3: inv3,
                    kv: [beta[0] * inv3, beta[1] * inv3],
                };
                let v = kernel.eval(&pair, &local);
                for c in 0..C {
                    b[c] += 0.5 * r * v[c];
                }
            }
            for (m, cm) in cosines.iter().enumerate() {
                for c in 0..C {
                    coef[m][c] += b[c] * cm;
                }
            }
        }
        let mut out = [0.0; C];
        let scale = 1.0 / CORRECTION_ANGLES as f64;
        for (m, (_, cm)) in SINGULAR_CORRECTION.iter().enumerate() {
            let norm = if m == 0 { scale } else { 2.0 * scale };
            for c in 0..C {
                out[c] += h * cm * norm * coef[m][c];
            }
        }
        out
    }

    /// Apply `kernel` to the source densities at every target point.
    /// `dens_grad` supplies the density gradients used by the local
    /// correction and may be empty when the correction is disabled.
    pub fn sweep<K: SurfaceKernel<C>, const C: usize>(
        &self,
        g: &SurfaceGeometry,
        stencil: &Stencil,
        kernel: &K,
        dens: &[&[f64]],
        dens_grad: &[[&[f64]; 2]],
    ) -> Vec<[f64; C]> {
        let n = self.n;
        let channels = dens.len();
        exec::map_range(n * n, self.exec, |i| {
            let (i1, i2) = (i / n, i % n);
            let gt = [g.grad[0][i], g.grad[1][i]];
            let ft = g.f[i];
            let mut acc = [0.0; C];
            let mut local = [0.0; 4];
            for nd in &stencil.nodes {
                let s = wrap(i1, nd.off[0], n) * n + wrap(i2, nd.off[1], n);
                for c in 0..channels {
                    local[c] = dens[c][s];
                }
                let pair = Pair {
                    bhat: nd.bhat,
                    inv_r: nd.inv_r,
                    dh: ft - g.f[s],
                    grad_t: gt,
                    grad_s: [g.grad[0][s], g.grad[1][s]],
                    k3: nd.k3,
                    kv: nd.kv,
                };
                let v = kernel.eval(&pair, &local[..channels]);
                for c in 0..C {
                    acc[c] += nd.weight * v[c];
                }
            }
            if self.fill {
                let jet = Self::jet(g, i);
                let d: Vec<f64> = dens.iter().map(|v| v[i]).collect();
                let dg: Vec<[f64; 2]> = dens_grad.iter().map(|v| [v[0][i], v[1][i]]).collect();
                let corr = self.correction(kernel, &jet, &d, &dg, stencil.h);
                for c in 0..C {
                    acc[c] += corr[c];
                }
            }
            acc
        })
    }

    /// Dense single-channel weights: row `i` holds the weight of each stencil
    /// node, followed by the local correction coefficients of the density
    /// value and its two derivatives at the target.
    pub fn matrix<K: SurfaceKernel<1>>(&self, g: &SurfaceGeometry, stencil: &Stencil, kernel: &K) -> Vec<f64> {
        let n = self.n;
        let rows = exec::map_range(n * n, self.exec, |i| {
            let (i1, i2) = (i / n, i % n);
            let gt = [g.grad[0][i], g.grad[1][i]];
            let ft = g.f[i];
            let mut row = Vec::with_capacity(stencil.len() + 3);
            for nd in &stencil.nodes {
                let s = wrap(i1, nd.off[0], n) * n + wrap(i2, nd.off[1], n);
                let pair = Pair {
                    bhat: nd.bhat,
                    inv_r: nd.inv_r,
                    dh: ft - g.f[s],
                    grad_t: gt,
                    grad_s: [g.grad[0][s], g.grad[1][s]],
                    k3: nd.k3,
                    kv: nd.kv,
                };
                row.push(nd.weight * kernel.eval(&pair, &[1.0])[0]);
            }
            if self.fill {
                let jet = Self::jet(g, i);
                row.push(self.correction(kernel, &jet, &[1.0], &[[0.0, 0.0]], stencil.h)[0]);
                row.push(self.correction(kernel, &jet, &[0.0], &[[1.0, 0.0]], stencil.h)[0]);
                row.push(self.correction(kernel, &jet, &[0.0], &[[0.0, 1.0]], stencil.h)[0]);
            } else {
                row.extend([0.0; 3]);
            }
            row
        });
        rows.concat()
    }

    pub fn apply_matrix(&self, stencil: &Stencil, matrix: &[f64], dens: &[f64], grad: [&[f64]; 2]) -> Vec<f64> {
        let n = self.n;
        let width = stencil.len() + 3;
        exec::map_range(n * n, self.exec, |i| {
            let (i1, i2) = (i / n, i % n);
            let row = &matrix[i * width..(i + 1) * width];
            let mut acc = 0.0;
            for (w, nd) in row.iter().zip(&stencil.nodes) {
                acc += w * dens[wrap(i1, nd.off[0], n) * n + wrap(i2, nd.off[1], n)];
            }
            let tail = &row[stencil.len()..];
            acc + tail[0] * dens[i] + tail[1] * grad[0][i] + tail[2] * grad[1][i]
        })
    }
}
