use thiserror::Error;

use crate::spectral::SpectralInterface;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("fit window [{t1}, {t2}] holds {found} usable samples, need {needed}")]
    EmptyWindow { t1: f64, t2: f64, found: usize, needed: usize },
    #[error("only {shells} spectral shells above the amplitude floor, need {needed}")]
    InsufficientDecades { shells: usize, needed: usize },
}

pub const MIN_FIT_SAMPLES: usize = 10;
pub const STRIP_MIN_SHELLS: usize = 8;
pub const STRIP_FLOOR: f64 = 1e-13;

/// Power-law fit `y ≈ C t^{exponent}` over `t ∈ [t1, t2]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub window: (f64, f64),
    pub exponent: f64,
    pub stderr: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Least squares on `(x, y)`: slope, its standard error and `r²`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let stderr = if x.len() > 2 { (ssr / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    let r2 = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    (slope, stderr, r2)
}

/// Slope of `log y` against `log t` over the samples with `t1 ≤ t ≤ t2`
/// and `y > 0`.
pub fn fit_decay(t: &[f64], y: &[f64], window: (f64, f64)) -> Result<DecayFit, FitError> {
    let (t1, t2) = window;
    let (lx, ly): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(y)
        .filter(|(ti, yi)| **ti >= t1 && **ti <= t2 && **ti > 0.0 && **yi > 0.0 && yi.is_finite())
        .map(|(ti, yi)| (ti.ln(), yi.ln()))
        .unzip();
    if !(t2 > t1) || lx.len() < MIN_FIT_SAMPLES {
        return Err(FitError::EmptyWindow { t1, t2, found: lx.len(), needed: MIN_FIT_SAMPLES });
    }
    let (exponent, stderr, r_squared) = linear_fit(&lx, &ly);
    Ok(DecayFit { window, exponent, stderr, r_squared, samples: lx.len() })
}

/// Width `ν̂t` of the analyticity strip, from the exponential decay rate of
/// the spectrum. For every integer shell `s ≤ |k| < s+1` the largest
/// coefficient above the floor is kept, and
/// `−log|f̂| ≈ a + ν̂t |ξ| + p log|ξ|` is fitted, the logarithmic term
/// absorbing an algebraic prefactor.
pub fn strip_estimate(f: &SpectralInterface) -> Result<f64, FitError> {
    let lat = f.lattice();
    let half = lat.modes() / 2;
    let shells = if lat.dims() == 1 { half + 1 } else { (half as f64 * std::f64::consts::SQRT_2) as usize + 2 };
    let mut best: Vec<(f64, f64)> = vec![(0.0, 0.0); shells];
    for (idx, c) in f.coeffs().iter().enumerate() {
        let k = lat.wavevector(idx);
        let r = (k[0] as f64).hypot(k[1] as f64);
        let s = r as usize;
        let a = c.norm();
        if s > 0 && a > best[s].1 {
            best[s] = (lat.xi_abs(idx), a);
        }
    }
    let pts: Vec<(f64, f64)> = best.into_iter().filter(|(_, a)| *a > STRIP_FLOOR).collect();
    if pts.len() < STRIP_MIN_SHELLS {
        return Err(FitError::InsufficientDecades { shells: pts.len(), needed: STRIP_MIN_SHELLS });
    }
    Ok(fit_three(&pts))
}

/// Least-squares coefficient of `ξ` in `−log a = c₀ + c₁ ξ + c₂ log ξ`.
fn fit_three(pts: &[(f64, f64)]) -> f64 {
    let rows: Vec<[f64; 3]> = pts.iter().map(|(xi, _)| [1.0, *xi, xi.ln()]).collect();
    let rhs: Vec<f64> = pts.iter().map(|(_, a)| -a.ln()).collect();
    let mut m = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for (row, y) in rows.iter().zip(&rhs) {
        for i in 0..3 {
            b[i] += row[i] * y;
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
        }
    }
    solve3(m, b)[1]
}

/// Gaussian elimination with partial pivoting.
fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let p = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap_or(col);
        m.swap(col, p);
        b.swap(col, p);
        for r in col + 1..3 {
            let q = m[r][col] / m[col][col];
            let pivot = m[col];
            for (dst, src) in m[r].iter_mut().zip(pivot).skip(col) {
                *dst -= q * src;
            }
            b[r] -= q * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|c| m[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / m[r][r];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Lattice;
    use num_complex::Complex64;

    #[test]
    fn exact_power_law() {
        let t: Vec<f64> = (1..=50).map(|i| i as f64).collect();
        let y: Vec<f64> = t.iter().map(|t| t.powi(-2)).collect();
        let fit = fit_decay(&t, &y, (1.0, 50.0)).unwrap();
        assert!((fit.exponent + 2.0).abs() < 1e-12);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn too_few_samples() {
        let t = [1.0, 2.0, 3.0];
        assert!(matches!(fit_decay(&t, &t, (0.0, 5.0)), Err(FitError::EmptyWindow { found: 3, .. })));
    }

    #[test]
    fn strip_of_exponential_spectrum_with_algebraic_prefactor() {
        let lat = Lattice::new(1, 256, 2.0 * std::f64::consts::PI).unwrap();
        let coeffs: Vec<Complex64> = (0..lat.len())
            .map(|i| {
                let k = lat.wavevector(i)[0].abs() as f64;
                Complex64::new((-0.3 * k).exp() / (1.0 + k * k), 0.0)
            })
            .collect();
        let f = SpectralInterface::from_coeffs(lat, coeffs, 0.0).unwrap();
        let s = strip_estimate(&f).unwrap();
        assert!((s - 0.3).abs() < 0.02, "{s}");
    }
}
