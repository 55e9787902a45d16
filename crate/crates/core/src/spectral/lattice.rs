use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::SpectralError;

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> PlanPair {
    static CACHE: OnceLock<Mutex<HashMap<usize, PlanPair>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// Uniform periodic grid of `n` points per axis on a square torus of side
/// `period`, in one or two parameter dimensions.
///
/// Flat indices are row-major: `i = i1 * n + i2` in two dimensions, with `i1`
/// running along the first axis. Spectral arrays share the layout and are
/// stored in FFT order, so index `i` on an axis holds wavenumber `i` for
/// `i <= n/2` and `i - n` otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    dims: usize,
    n: usize,
    period: f64,
}

impl Lattice {
    pub fn new(dims: usize, n: usize, period: f64) -> Result<Self, SpectralError> {
        if dims != 1 && dims != 2 {
            return Err(SpectralError::InvalidLattice(format!("dims must be 1 or 2, got {dims}")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(SpectralError::InvalidLattice(format!(
                "modes must be a power of two >= 4, got {n}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(SpectralError::InvalidLattice(format!("period must be positive, got {period}")));
        }
        Ok(Self { dims, n, period })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Total number of grid points (`n^dims`).
    pub fn len(&self) -> usize {
        self.n.pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    /// Wavenumber stored at per-axis FFT index `i`.
    pub fn axis_wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Per-axis FFT index of wavenumber `k` (taken modulo `n`).
    pub fn axis_index(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    /// Integer wavevector at a flat index; the second component is 0 in 1D.
    pub fn wavevector(&self, idx: usize) -> [i64; 2] {
        if self.dims == 1 {
            [self.axis_wavenumber(idx), 0]
        } else {
            [self.axis_wavenumber(idx / self.n), self.axis_wavenumber(idx % self.n)]
        }
    }

    /// Flat index of an integer wavevector.
    pub fn flat_index(&self, k: [i64; 2]) -> usize {
        if self.dims == 1 {
            self.axis_index(k[0])
        } else {
            self.axis_index(k[0]) * self.n + self.axis_index(k[1])
        }
    }

    /// Flat index of the mode `-k`.
    pub fn mirror(&self, idx: usize) -> usize {
        let k = self.wavevector(idx);
        self.flat_index([-k[0], -k[1]])
    }

    /// Angular frequency `2πk/L`.
    pub fn xi(&self, idx: usize) -> [f64; 2] {
        let k = self.wavevector(idx);
        let c = 2.0 * PI / self.period;
        [c * k[0] as f64, c * k[1] as f64]
    }

    pub fn xi_abs(&self, idx: usize) -> f64 {
        let [a, b] = self.xi(idx);
        a.hypot(b)
    }

    /// True when some axis sits on the unpaired Nyquist wavenumber `n/2`.
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let half = (self.n / 2) as i64;
        let k = self.wavevector(idx);
        k[0] == half || (self.dims == 2 && k[1] == half)
    }

    /// Sample coordinates of grid point `idx`.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let h = self.spacing();
        if self.dims == 1 {
            [idx as f64 * h, 0.0]
        } else {
            [(idx / self.n) as f64 * h, (idx % self.n) as f64 * h]
        }
    }

    pub fn same_grid(&self, other: &Lattice) -> bool {
        self == other
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let (fwd, inv) = plans(self.n);
        let plan = if inverse { inv } else { fwd };
        plan.process(buf);
        if self.dims == 2 {
            let n = self.n;
            let mut t = vec![Complex64::new(0.0, 0.0); buf.len()];
            for i in 0..n {
                for j in 0..n {
                    t[j * n + i] = buf[i * n + j];
                }
            }
            plan.process(&mut t);
            for i in 0..n {
                for j in 0..n {
                    buf[i * n + j] = t[j * n + i];
                }
            }
        }
    }

    /// Fourier coefficients `f̂(k) = N^{-d} Σ f(x_j) e^{-2πi k·x_j/L}` of real
    /// samples, all modes retained.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        assert_eq!(values.len(), self.len(), "sample count does not match lattice");
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, false);
        let scale = 1.0 / self.len() as f64;
        for c in &mut buf {
            *c *= scale;
        }
        buf
    }

    /// Real part of the synthesis `Σ f̂(k) e^{2πi k·x/L}` on the grid.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        assert_eq!(coeffs.len(), self.len(), "coefficient count does not match lattice");
        let mut buf = coeffs.to_vec();
        self.transform(&mut buf, true);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Apply a Fourier multiplier to real samples. The Nyquist modes are
    /// dropped, as is the mean when `keep_mean` is false.
    pub fn filter_grid<F>(&self, values: &[f64], keep_mean: bool, symbol: F) -> Vec<f64>
    where
        F: Fn([f64; 2]) -> Complex64,
    {
        let mut c = self.forward(values);
        for (idx, v) in c.iter_mut().enumerate() {
            if self.is_nyquist(idx) || (idx == 0 && !keep_mean) {
                *v = Complex64::new(0.0, 0.0);
            } else if idx != 0 {
                *v *= symbol(self.xi(idx));
            }
        }
        self.inverse(&c)
    }

    /// Spectral partial derivative of real samples along `axis` (0 or 1).
    pub fn grid_derivative(&self, values: &[f64], axis: usize) -> Vec<f64> {
        self.filter_grid(values, false, |xi| Complex64::new(0.0, xi[axis]))
    }

    /// `Λ` (multiplier `|ξ|`) applied to real samples.
    pub fn grid_lambda(&self, values: &[f64]) -> Vec<f64> {
        self.filter_grid(values, false, |xi| Complex64::new(xi[0].hypot(xi[1]), 0.0))
    }

    /// Riesz transform (multiplier `-iξ_axis/|ξ|`) applied to real samples.
    pub fn grid_riesz(&self, values: &[f64], axis: usize) -> Vec<f64> {
        self.filter_grid(values, false, |xi| Complex64::new(0.0, -xi[axis] / xi[0].hypot(xi[1])))
    }
}
