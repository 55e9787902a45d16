//! The contour equation at equal viscosities against direct quadrature of
//! the classical single-integral form, evaluated independently of the
//! library's kernels.

use std::f64::consts::PI;

use muskat::constants::FluidParams;
use muskat::dynamics;
use muskat::interface_ops::QuadratureScheme;
use muskat::spectral::{Lattice, SpectralInterface};

/// `(a, k, phase)` terms of `f = Σ a cos(k·x + phase)`.
type Modes = [(f64, [f64; 2], f64)];

fn eval(m: &Modes, x: [f64; 2]) -> f64 {
    m.iter().map(|(a, k, p)| a * (k[0] * x[0] + k[1] * x[1] + p).cos()).sum()
}

fn grad(m: &Modes, x: [f64; 2]) -> [f64; 2] {
    let mut g = [0.0; 2];
    for (a, k, p) in m {
        let s = -a * (k[0] * x[0] + k[1] * x[1] + p).sin();
        g[0] += s * k[0];
        g[1] += s * k[1];
    }
    g
}

/// `(A_ρ/π) ∫_0^L (f'(α) − f'(α−β)) Re P(β + iΔf) dβ` with the periodized
/// cotangent kernel `P(z) = (π/L) cot(πz/L)`, trapezoid rule in β.
fn curve_oracle(m: &Modes, a_rho: f64, period: f64, alpha: f64, nodes: usize) -> f64 {
    let h = period / nodes as f64;
    let fa = eval(m, [alpha, 0.0]);
    let da = grad(m, [alpha, 0.0])[0];
    let mut acc = 0.0;
    for j in 0..nodes {
        let beta = j as f64 * h;
        let v = if j == 0 {
            let f2: f64 = m.iter().map(|(a, k, p)| -a * k[0] * k[0] * (k[0] * alpha + p).cos()).sum();
            f2 / (1.0 + da * da)
        } else {
            let s = alpha - beta;
            let df = fa - eval(m, [s, 0.0]);
            // Re (π/L) cot(π(β + iΔf)/L) = (π/L) sin(2u) / (cosh(2v) − cos(2u))
            let (u, w) = (PI * beta / period, PI * df / period);
            let re = PI / period * (2.0 * u).sin() / ((2.0 * w).cosh() - (2.0 * u).cos());
            (da - grad(m, [s, 0.0])[0]) * re
        };
        acc += v;
    }
    a_rho / PI * acc * h
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (0.5 * (1.0 - x), 1.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// `(A_ρ/2π) ∫_{ℝ²} (∇f(x) − ∇f(x−y))·y / (|y|² + Δf²)^{3/2} dy`, written as
/// `−A_ρΛf` plus the nonlinear remainder, which decays like `|y|^{-4}` and
/// is integrated in polar coordinates out to radius `r_max`.
fn surface_oracle(m: &Modes, a_rho: f64, x: [f64; 2], r_max: f64) -> f64 {
    let linear: f64 = -m.iter().map(|(a, k, p)| a * k[0].hypot(k[1]) * (k[0] * x[0] + k[1] * x[1] + p).cos()).sum::<f64>();
    let gl = gauss_legendre(16);
    let n_theta = 128;
    let panels = r_max.ceil() as usize * 2;
    let width = r_max / panels as f64;
    let fx = eval(m, x);
    let gx = grad(m, x);
    let mut acc = 0.0;
    for it in 0..n_theta {
        let th = 2.0 * PI * it as f64 / n_theta as f64;
        let (c, s) = (th.cos(), th.sin());
        for p in 0..panels {
            for (node, w) in &gl {
                let r = (p as f64 + node) * width;
                let y = [x[0] - r * c, x[1] - r * s];
                let df = fx - eval(m, y);
                let gy = grad(m, y);
                let dot = (gx[0] - gy[0]) * c + (gx[1] - gy[1]) * s;
                let q = df / r;
                // dot · r · [(1+q²)^{-3/2} − 1] / r³ against r dr dθ
                let g = (1.0 + q * q).powf(-1.5) - 1.0;
                acc += w * width * dot * g / r;
            }
        }
    }
    let remainder = acc * (2.0 * PI / n_theta as f64) / (2.0 * PI);
    a_rho * (linear + remainder)
}

fn interface(lat: Lattice, m: &Modes) -> SpectralInterface {
    SpectralInterface::from_fn(lat, |x| eval(m, x))
}

#[test]
fn curve_rhs_matches_single_integral_form() {
    let period = 2.0 * PI;
    let modes = [(0.12, [1.0, 0.0], 0.3), (0.05, [2.0, 0.0], -1.1), (0.02, [3.0, 0.0], 0.5)];
    let lat = Lattice::new(1, 128, period).unwrap();
    let f = interface(lat, &modes);
    for a_rho in [1.0, -0.7] {
        let rhs = dynamics::rhs(&f, &FluidParams::new(0.0, a_rho), &QuadratureScheme::default()).unwrap();
        let grid = rhs.total.to_grid();
        let mut worst: f64 = 0.0;
        for i in (0..lat.len()).step_by(5) {
            let alpha = lat.point(i)[0];
            worst = worst.max((grid[i] - curve_oracle(&modes, a_rho, period, alpha, 512)).abs());
        }
        assert!(worst < 1e-12, "A_rho = {a_rho}: sup error {worst:e}");
    }
}

#[test]
fn surface_rhs_matches_single_integral_form() {
    let period = 2.0 * PI;
    let modes = [(0.04, [1.0, 0.0], 0.2), (0.03, [0.0, 1.0], -0.4), (0.015, [1.0, 1.0], 1.0)];
    let lat = Lattice::new(2, 32, period).unwrap();
    let f = interface(lat, &modes);
    let scheme = QuadratureScheme { window_periods: 5, ..QuadratureScheme::default() };
    let rhs = dynamics::rhs(&f, &FluidParams::new(0.0, 1.0), &scheme).unwrap();
    let grid = rhs.total.to_grid();
    let scale = grid.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst: f64 = 0.0;
    for i in (0..lat.len()).step_by(97) {
        worst = worst.max((grid[i] - surface_oracle(&modes, 1.0, lat.point(i), 20.0 * PI)).abs());
    }
    assert!(worst < 1e-5 * scale, "sup error {worst:e} against scale {scale:e}");
}
