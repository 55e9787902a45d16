//! Square-lattice constants used by the singular quadrature corrections and
//! the periodized whole-plane kernels.

/// Punctured-trapezoid correction constants for `cos(mθ)/r` singularities,
/// `m = 0, 4, 8, 12, 16`. For smooth `φ` with `φ(0) = 1`,
/// `∫ φ cos(mθ)/r − h² Σ_{j≠0} (φ cos(mθ)/r)(hj) = h c_m + O(h³)`.
///
/// `c₀ = -4 ζ(1/2) β(1/2)`; the others come from Gaussian-cutoff lattice sums.
pub const SINGULAR_CORRECTION: [(usize, f64); 5] = [
    (0, 3.900_264_920_001_956),
    (4, -2.080_297_870_8),
    (8, -6.736_498_35),
    (12, -4.860_673_0),
    (16, -12.675_224),
];

/// `Σ_{n ∈ ℤ², n ≠ 0} |n|^{-3} = 4 ζ(3/2) β(3/2)`.
pub const LATTICE_ZETA_3: f64 = 9.033_621_683_100_95;

/// Half-width of the explicit image sum in the periodized kernels.
pub const IMAGE_SHELLS: i64 = 24;

/// Periodized kernels `Σ_n |β + nL|^{-3}` and `Σ_n (β + nL)/|β + nL|³`,
/// the second summed over expanding squares. Images beyond `IMAGE_SHELLS`
/// are replaced by their leading Taylor terms around `β = 0`.
pub struct PeriodicKernels {
    shells: i64,
    tail_scalar: f64,
    tail_linear: f64,
}

impl PeriodicKernels {
    pub fn new(period: f64) -> Self {
        Self::with_shells(period, IMAGE_SHELLS)
    }

    pub fn with_shells(period: f64, shells: i64) -> Self {
        let mut inner = 0.0;
        for a in -shells..=shells {
            for b in -shells..=shells {
                if a != 0 || b != 0 {
                    inner += ((a * a + b * b) as f64).powf(-1.5);
                }
            }
        }
        let tail = LATTICE_ZETA_3 - inner;
        let l3 = period.powi(3);
        Self { shells, tail_scalar: tail / l3, tail_linear: -0.5 * tail / l3 }
    }

    /// Both kernels at offset `beta`, excluding the `n = 0` image when
    /// `skip_origin` is set. The offset is first reduced to the cell
    /// centred at the origin, where the image window is symmetric.
    pub fn eval(&self, beta: [f64; 2], period: f64, skip_origin: bool) -> (f64, [f64; 2]) {
        let wrap = [(beta[0] / period).round(), (beta[1] / period).round()];
        let beta = [beta[0] - wrap[0] * period, beta[1] - wrap[1] * period];
        let origin = [wrap[0] as i64, wrap[1] as i64];
        let mut k3 = self.tail_scalar;
        let mut kv = [self.tail_linear * beta[0], self.tail_linear * beta[1]];
        for a in -self.shells..=self.shells {
            for b in -self.shells..=self.shells {
                if skip_origin && a == origin[0] && b == origin[1] {
                    continue;
                }
                let x = beta[0] + a as f64 * period;
                let y = beta[1] + b as f64 * period;
                let r2 = x * x + y * y;
                let inv3 = 1.0 / (r2 * r2.sqrt());
                k3 += inv3;
                kv[0] += x * inv3;
                kv[1] += y * inv3;
            }
        }
        (k3, kv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_zeta_matches_direct_sum_with_tail_integral() {
        let m = 400i64;
        let mut s = 0.0;
        for a in -m..=m {
            for b in -m..=m {
                if a != 0 || b != 0 {
                    s += ((a * a + b * b) as f64).powf(-1.5);
                }
            }
        }
        // Tail of Σ|n|^{-3} outside the square of half-width m, by the
        // continuum integral over the region outside the square.
        let tail = continuum_tail(m as f64 + 0.5);
        assert!((s + tail - LATTICE_ZETA_3).abs() < 1e-6, "{} vs {}", s + tail, LATTICE_ZETA_3);
    }

    fn continuum_tail(half: f64) -> f64 {
        // ∫ over |x|_∞ > half of |x|^{-3} = 8 ∫_0^{π/4} dθ / (half / cos θ)
        let n = 2000;
        let mut acc = 0.0;
        for i in 0..n {
            let th = (i as f64 + 0.5) / n as f64 * std::f64::consts::FRAC_PI_4;
            acc += th.cos() / half;
        }
        8.0 * acc * std::f64::consts::FRAC_PI_4 / n as f64
    }

    #[test]
    fn periodized_kernels_are_periodic() {
        let l = 2.0;
        let k = PeriodicKernels::new(l);
        let (a3, av) = k.eval([0.3, -0.7], l, false);
        let (b3, bv) = k.eval([0.3 + l, -0.7], l, false);
        assert!((a3 - b3).abs() < 1e-6 * a3);
        assert!((av[0] - bv[0]).abs() < 1e-5 && (av[1] - bv[1]).abs() < 1e-5);
    }

    #[test]
    fn vector_kernel_is_odd() {
        let l = 1.0;
        let k = PeriodicKernels::new(l);
        let (_, a) = k.eval([0.21, 0.13], l, false);
        let (_, b) = k.eval([-0.21, -0.13], l, false);
        assert!((a[0] + b[0]).abs() < 1e-10 && (a[1] + b[1]).abs() < 1e-10);
    }
}
