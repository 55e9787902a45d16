//! Periodic Fourier representation of interface graphs, with the weighted
//! Wiener and Sobolev norms and the Fourier multipliers used throughout.
//!
//! Conventions: `f(x) = Σ_k f̂(k) e^{2πi k·x/L}`, so `0.3 cos x` on a `2π`
//! torus has `f̂(±1) = 0.15`. The continuum frequency is `ξ = 2πk/L`. The
//! Nyquist modes are held at zero so every stored spectrum is exactly
//! Hermitian, and the `k = 0` mode is held at zero (mean height zero).

mod lattice;
mod snapshot;

use num_complex::Complex64;
use thiserror::Error;

use crate::exec::{self, Execution};

pub use lattice::Lattice;
pub use snapshot::{Snapshot, SNAPSHOT_VERSION};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("analytic weight overflows at |k| = {k}")]
    WeightOverflow { k: f64 },
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("lattice mismatch between operands")]
    GridMismatch,
    #[error("non-finite coefficient at flat index {0}")]
    NonFinite(usize),
    #[error("invalid norm specification: {0}")]
    InvalidNorm(String),
    #[error("axis {axis} not available in {dims} dimension(s)")]
    InvalidAxis { axis: usize, dims: usize },
}

/// Exponent of a weighted norm: `1` for Wiener-type sums, `2` for Sobolev.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exponent {
    One,
    Two,
}

/// Order `s`, exponent `p`, analyticity rate `nu` and evaluation time `t` of
/// the weight `|ξ|^{s p} e^{p ν t |ξ|}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormSpec {
    pub s: f64,
    pub p: Exponent,
    pub nu: f64,
    pub t: f64,
}

impl NormSpec {
    pub fn wiener(s: f64) -> Self {
        Self { s, p: Exponent::One, nu: 0.0, t: 0.0 }
    }

    pub fn sobolev(s: f64) -> Self {
        Self { s, p: Exponent::Two, nu: 0.0, t: 0.0 }
    }

    /// Attach the analytic weight `e^{ν t |ξ|}`.
    pub fn weighted(self, nu: f64, t: f64) -> Self {
        Self { nu, t, ..self }
    }

    fn validate(&self) -> Result<(), SpectralError> {
        if !(self.s.is_finite() && self.s >= -1.0) {
            return Err(SpectralError::InvalidNorm(format!("order s = {} must be >= -1", self.s)));
        }
        if !(self.nu.is_finite() && self.nu >= 0.0) {
            return Err(SpectralError::InvalidNorm(format!("rate nu = {} must be >= 0", self.nu)));
        }
        if !(self.t.is_finite() && self.t >= 0.0) {
            return Err(SpectralError::InvalidNorm(format!("time t = {} must be >= 0", self.t)));
        }
        Ok(())
    }
}

/// Fourier coefficients of a real, mean-zero, periodic interface graph.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralInterface {
    lattice: Lattice,
    coeffs: Vec<Complex64>,
    time: f64,
}

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

impl SpectralInterface {
    pub fn zeros(lattice: Lattice) -> Self {
        Self { lattice, coeffs: vec![ZERO; lattice.len()], time: 0.0 }
    }

    /// Build from FFT-ordered coefficients. The input is projected onto the
    /// admissible set: Hermitian-symmetrized, mean and Nyquist modes zeroed.
    pub fn from_coeffs(lattice: Lattice, coeffs: Vec<Complex64>, time: f64) -> Result<Self, SpectralError> {
        if coeffs.len() != lattice.len() {
            return Err(SpectralError::GridMismatch);
        }
        if let Some(i) = coeffs.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(SpectralError::NonFinite(i));
        }
        let mut out = Self { lattice, coeffs, time };
        out.project();
        Ok(out)
    }

    /// Build from real samples on the lattice grid.
    pub fn from_grid(lattice: Lattice, values: &[f64], time: f64) -> Result<Self, SpectralError> {
        if values.len() != lattice.len() {
            return Err(SpectralError::GridMismatch);
        }
        Self::from_coeffs(lattice, lattice.forward(values), time)
    }

    /// Sample `f` at the grid points and transform.
    pub fn from_fn<F: Fn([f64; 2]) -> f64>(lattice: Lattice, f: F) -> Self {
        let values: Vec<f64> = (0..lattice.len()).map(|i| f(lattice.point(i))).collect();
        Self::from_grid(lattice, &values, 0.0).expect("sampled function must be finite")
    }

    fn project(&mut self) {
        let lat = self.lattice;
        for idx in 0..lat.len() {
            if idx == 0 || lat.is_nyquist(idx) {
                self.coeffs[idx] = ZERO;
                continue;
            }
            let m = lat.mirror(idx);
            if m > idx {
                let avg = (self.coeffs[idx] + self.coeffs[m].conj()) * 0.5;
                self.coeffs[idx] = avg;
                self.coeffs[m] = avg.conj();
            }
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn dims(&self) -> usize {
        self.lattice.dims()
    }

    pub fn modes(&self) -> usize {
        self.lattice.modes()
    }

    pub fn period(&self) -> f64 {
        self.lattice.period()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of integer wavevector `k` (zero outside the stored band).
    pub fn coeff(&self, k: [i64; 2]) -> Complex64 {
        let half = (self.modes() / 2) as i64;
        if k[0].abs() > half || k[1].abs() > half || (self.dims() == 1 && k[1] != 0) {
            return ZERO;
        }
        self.coeffs[self.lattice.flat_index(k)]
    }

    pub fn to_grid(&self) -> Vec<f64> {
        self.lattice.inverse(&self.coeffs)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }

    /// Maximum deviation from Hermitian symmetry, mean zero and Nyquist zero.
    /// Exactly 0 for every value produced by this module.
    pub fn invariant_defect(&self) -> f64 {
        let lat = self.lattice;
        let mut worst = self.coeffs[0].norm();
        for idx in 1..lat.len() {
            if lat.is_nyquist(idx) {
                worst = worst.max(self.coeffs[idx].norm());
            } else {
                let m = lat.mirror(idx);
                worst = worst.max((self.coeffs[idx] - self.coeffs[m].conj()).norm());
            }
        }
        worst
    }

    /// Apply a multiplier `symbol(ξ)` to every admissible mode. The symbol
    /// must satisfy `symbol(-ξ) = conj(symbol(ξ))` for the result to stay real.
    pub fn map_symbol<F: Fn([f64; 2]) -> Complex64>(&self, symbol: F) -> Self {
        let lat = self.lattice;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| if *c == ZERO { ZERO } else { c * symbol(lat.xi(idx)) })
            .collect();
        Self { lattice: lat, coeffs, time: self.time }
    }

    /// Apply a real radial multiplier `m(|ξ|)`.
    pub fn map_radial<F: Fn(f64) -> f64>(&self, m: F) -> Self {
        self.map_symbol(|xi| Complex64::new(m(xi[0].hypot(xi[1])), 0.0))
    }

    /// Keep only modes with every `|k_i| <= fraction * N/2`.
    pub fn dealias(&self, fraction: f64) -> Self {
        let lat = self.lattice;
        let cut = fraction * (self.modes() / 2) as f64;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let k = lat.wavevector(idx);
                if (k[0].abs() as f64) <= cut && (k[1].abs() as f64) <= cut {
                    *c
                } else {
                    ZERO
                }
            })
            .collect();
        Self { lattice: lat, coeffs, time: self.time }
    }

    fn check_grid(&self, other: &Self) -> Result<(), SpectralError> {
        if self.lattice.same_grid(&other.lattice) {
            Ok(())
        } else {
            Err(SpectralError::GridMismatch)
        }
    }

    /// `self + a * other`, keeping the time of `self`.
    pub fn axpy(&self, a: f64, other: &Self) -> Result<Self, SpectralError> {
        self.check_grid(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x + y * a).collect();
        Ok(Self { lattice: self.lattice, coeffs, time: self.time })
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { lattice: self.lattice, coeffs: self.coeffs.iter().map(|c| c * a).collect(), time: self.time }
    }

    /// Translate the graph by `shift` (physical units): `g(x) = f(x - shift)`.
    pub fn translate(&self, shift: [f64; 2]) -> Self {
        self.map_symbol(|xi| {
            let phase = -(xi[0] * shift[0] + xi[1] * shift[1]);
            Complex64::new(phase.cos(), phase.sin())
        })
    }

    pub fn to_snapshot(&self) -> Snapshot {
        Snapshot::from_interface(self)
    }
}

/// `Λ f`, the multiplier `|ξ|`.
pub fn apply_lambda(f: &SpectralInterface) -> SpectralInterface {
    f.map_radial(|r| r)
}

/// Riesz transform along `axis` (1 or 2), multiplier `-iξ_axis/|ξ|`.
pub fn apply_riesz(f: &SpectralInterface, axis: usize) -> Result<SpectralInterface, SpectralError> {
    let a = axis_slot(f.dims(), axis)?;
    Ok(f.map_symbol(|xi| Complex64::new(0.0, -xi[a] / xi[0].hypot(xi[1]))))
}

/// Partial derivative along `axis` (1 or 2), multiplier `iξ_axis`.
pub fn derivative(f: &SpectralInterface, axis: usize) -> Result<SpectralInterface, SpectralError> {
    let a = axis_slot(f.dims(), axis)?;
    Ok(f.map_symbol(|xi| Complex64::new(0.0, xi[a])))
}

fn axis_slot(dims: usize, axis: usize) -> Result<usize, SpectralError> {
    if axis == 0 || axis > dims {
        Err(SpectralError::InvalidAxis { axis, dims })
    } else {
        Ok(axis - 1)
    }
}

const LN_MAX: f64 = 709.0;

fn weighted_terms(f: &SpectralInterface, spec: &NormSpec, power: f64) -> Result<Vec<f64>, SpectralError> {
    spec.validate()?;
    let lat = *f.lattice();
    let rate = spec.nu * spec.t;
    let terms = exec::map_range(lat.len(), Execution::default(), |idx| {
        let c = f.coeffs[idx];
        if c == ZERO {
            return Ok(0.0);
        }
        let r = lat.xi_abs(idx);
        let log_w = power * (spec.s * r.ln() + rate * r);
        let log_term = log_w + power * c.norm().ln();
        if log_w >= LN_MAX || log_term >= LN_MAX {
            let k = lat.wavevector(idx);
            return Err(SpectralError::WeightOverflow { k: (k[0] as f64).hypot(k[1] as f64) });
        }
        Ok(log_term.exp())
    });
    terms.into_iter().collect()
}

/// `Σ_{k≠0} |ξ|^s e^{νt|ξ|} |f̂(k)|`, the lattice Wiener norm.
pub fn wiener_norm(f: &SpectralInterface, spec: &NormSpec) -> Result<f64, SpectralError> {
    if spec.p != Exponent::One {
        return Err(SpectralError::InvalidNorm("wiener_norm needs p = 1".into()));
    }
    Ok(exec::tree_sum(&weighted_terms(f, spec, 1.0)?))
}

/// `(Σ_{k≠0} |ξ|^{2s} e^{2νt|ξ|} |f̂(k)|²)^{1/2}`, the coefficient Sobolev norm.
pub fn sobolev_norm(f: &SpectralInterface, spec: &NormSpec) -> Result<f64, SpectralError> {
    if spec.p != Exponent::Two {
        return Err(SpectralError::InvalidNorm("sobolev_norm needs p = 2".into()));
    }
    Ok(exec::tree_sum(&weighted_terms(f, spec, 2.0)?).sqrt())
}

/// Physical `L²` norm `(∫|f|²)^{1/2} = L^{d/2} ‖f̂‖_{ℓ²}`.
pub fn l2_norm(f: &SpectralInterface) -> f64 {
    let coeff = sobolev_norm(f, &NormSpec::sobolev(0.0)).expect("unweighted norm cannot overflow");
    f.period().powf(f.dims() as f64 / 2.0) * coeff
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn lat1(n: usize) -> Lattice {
        Lattice::new(1, n, 2.0 * PI).unwrap()
    }

    #[test]
    fn cosine_wiener_norms() {
        let f = SpectralInterface::from_fn(lat1(32), |x| 0.3 * x[0].cos());
        assert!((f.coeff([1, 0]).re - 0.15).abs() < 1e-15);
        let n = wiener_norm(&f, &NormSpec::wiener(1.0)).unwrap();
        assert!((n - 0.3).abs() < 1e-14);
        let w = wiener_norm(&f, &NormSpec::wiener(1.0).weighted(0.1, 1.0)).unwrap();
        assert!((w - 0.3 * 0.1f64.exp()).abs() < 1e-14);
        let g = SpectralInterface::from_fn(lat1(32), |x| 0.2 * x[0].cos() + 0.05 * (2.0 * x[0]).cos());
        assert!((wiener_norm(&g, &NormSpec::wiener(1.0)).unwrap() - 0.3).abs() < 1e-14);
    }

    #[test]
    fn coefficient_l2_and_physical_l2() {
        let f = SpectralInterface::from_fn(lat1(16), |x| 0.3 * x[0].cos());
        let c = sobolev_norm(&f, &NormSpec::sobolev(0.0)).unwrap();
        assert!((c - 0.15 * 2f64.sqrt()).abs() < 1e-15);
        let direct = (0.09 * PI).sqrt();
        assert!((l2_norm(&f) - direct).abs() < 1e-14);
        let z = SpectralInterface::zeros(lat1(16));
        assert_eq!(sobolev_norm(&z, &NormSpec::sobolev(1.0)).unwrap(), 0.0);
        assert_eq!(wiener_norm(&z, &NormSpec::wiener(1.0)).unwrap(), 0.0);
    }

    #[test]
    fn wrong_exponent_rejected() {
        let f = SpectralInterface::zeros(lat1(8));
        assert!(wiener_norm(&f, &NormSpec::sobolev(1.0)).is_err());
        assert!(sobolev_norm(&f, &NormSpec::wiener(1.0)).is_err());
        assert!(wiener_norm(&f, &NormSpec::wiener(-2.0)).is_err());
    }

    #[test]
    fn overflow_reports_wavenumber() {
        let lat = lat1(64);
        let mut coeffs = vec![ZERO; lat.len()];
        coeffs[lat.flat_index([20, 0])] = Complex64::new(0.5, 0.0);
        coeffs[lat.flat_index([-20, 0])] = Complex64::new(0.5, 0.0);
        let f = SpectralInterface::from_coeffs(lat, coeffs, 0.0).unwrap();
        let err = wiener_norm(&f, &NormSpec::wiener(1.0).weighted(40.0, 1.0)).unwrap_err();
        assert_eq!(err, SpectralError::WeightOverflow { k: 20.0 });
    }

    #[test]
    fn multipliers_on_cosines() {
        let f = SpectralInterface::from_fn(lat1(32), |x| x[0].cos());
        let g = SpectralInterface::from_fn(lat1(32), |x| (2.0 * x[0]).cos());
        let lf = apply_lambda(&f).to_grid();
        let lg = apply_lambda(&g).to_grid();
        let rf = apply_riesz(&f, 1).unwrap().to_grid();
        let df = derivative(&f, 1).unwrap().to_grid();
        for i in 0..32 {
            let x = lat1(32).point(i)[0];
            assert!((lf[i] - x.cos()).abs() < 1e-14);
            assert!((lg[i] - 2.0 * (2.0 * x).cos()).abs() < 1e-14);
            assert!((rf[i] - x.sin()).abs() < 1e-14);
            assert!((df[i] + x.sin()).abs() < 1e-14);
        }
        assert!(apply_riesz(&f, 2).is_err());
    }

    #[test]
    fn lambda_squared_is_laplacian_symbol() {
        let lat = Lattice::new(2, 16, 3.0).unwrap();
        let f = SpectralInterface::from_fn(lat, |x| (2.0 * PI * x[0] / 3.0).sin() * (4.0 * PI * x[1] / 3.0).cos());
        let ll = apply_lambda(&apply_lambda(&f));
        let sq = f.map_radial(|r| r * r);
        for (a, b) in ll.coeffs().iter().zip(sq.coeffs()) {
            assert!((a - b).norm() <= 1e-15 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn translate_shifts_samples() {
        let lat = lat1(16);
        let f = SpectralInterface::from_fn(lat, |x| x[0].sin() + 0.5 * (3.0 * x[0]).cos());
        let h = lat.spacing();
        let g = f.translate([3.0 * h, 0.0]).to_grid();
        let v = f.to_grid();
        for i in 0..16 {
            assert!((g[(i + 3) % 16] - v[i]).abs() < 1e-14);
        }
    }
}
