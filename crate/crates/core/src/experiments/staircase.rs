//! Radial shell counterexample for data in the Wiener space `F^{1,1}` that
//! leave `Ḣ^s`. The profile lives on the two-dimensional frequency plane:
//! shell `n` is the annulus `n^δ ≤ |ξ| ≤ n^δ + n^{−γ}` on which
//! `|ξ| |f̂(ξ)| = n^σ`. Every shell integral has a closed form.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StaircaseError {
    #[error("exponent constraint violated: {0}")]
    ConstraintViolated(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StaircaseSpec {
    pub sigma_exp: f64,
    pub delta_exp: f64,
    pub gamma_exp: f64,
    pub s_target: f64,
    pub n_shells: u64,
}

/// Tolerance on the borderline equality; exact for dyadic exponents.
const BORDERLINE_TOL: f64 = 1e-12;

impl StaircaseSpec {
    /// Exponent of `n` in the `F^{1,1}` shell contribution.
    pub fn f11_exponent(&self) -> f64 {
        self.sigma_exp + self.delta_exp - self.gamma_exp
    }

    /// Exponent of `n` in the `L²` shell contribution.
    pub fn l2_exponent(&self) -> f64 {
        2.0 * self.sigma_exp - self.delta_exp - self.gamma_exp
    }

    /// Exponent of `n` in the `Ḣ^s` shell contribution.
    pub fn hs_exponent(&self) -> f64 {
        2.0 * self.sigma_exp + self.delta_exp * (2.0 * self.s_target - 1.0) - self.gamma_exp
    }

    pub fn validate(&self) -> Result<(), StaircaseError> {
        let fields = [self.sigma_exp, self.delta_exp, self.gamma_exp, self.s_target];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(StaircaseError::ConstraintViolated("exponents must be finite".into()));
        }
        if !(self.delta_exp > 0.0 && self.s_target > 0.0) {
            return Err(StaircaseError::ConstraintViolated("need delta > 0 and s > 0".into()));
        }
        if self.n_shells < 2 {
            return Err(StaircaseError::ConstraintViolated("need at least two shells".into()));
        }
        if !(self.f11_exponent() < -1.0) {
            return Err(StaircaseError::ConstraintViolated(format!(
                "sigma + delta - gamma = {} is not below -1",
                self.f11_exponent()
            )));
        }
        if !(self.l2_exponent() < -1.0) {
            return Err(StaircaseError::ConstraintViolated(format!(
                "2 sigma - delta - gamma = {} is not below -1",
                self.l2_exponent()
            )));
        }
        if (self.hs_exponent() + 1.0).abs() > BORDERLINE_TOL {
            return Err(StaircaseError::ConstraintViolated(format!(
                "2 sigma + delta (2s - 1) - gamma = {} is not -1",
                self.hs_exponent()
            )));
        }
        Ok(())
    }

    fn radii(&self, n: f64) -> (f64, f64) {
        let r0 = n.powf(self.delta_exp);
        (r0, n.powf(-self.gamma_exp))
    }

    /// `∫ |ξ| |f̂| dξ` over shell `n`.
    pub fn f11_shell(&self, n: u64) -> f64 {
        let n = n as f64;
        let (r0, w) = self.radii(n);
        PI * n.powf(self.sigma_exp) * w * (2.0 * r0 + w)
    }

    /// `∫ |f̂|² dξ` over shell `n`.
    pub fn l2_shell(&self, n: u64) -> f64 {
        let n = n as f64;
        let (r0, w) = self.radii(n);
        2.0 * PI * n.powf(2.0 * self.sigma_exp) * (w / r0).ln_1p()
    }

    /// `∫ |ξ|^{2s} |f̂|² dξ` over shell `n`.
    pub fn hs_shell(&self, n: u64) -> f64 {
        let n = n as f64;
        let (r0, w) = self.radii(n);
        let s2 = 2.0 * self.s_target;
        // ((r0 + w)^{2s} − r0^{2s}) / 2s, written to avoid cancellation.
        let growth = r0.powf(s2) * (s2 * (w / r0).ln_1p()).exp_m1() / s2;
        2.0 * PI * n.powf(2.0 * self.sigma_exp) * growth
    }

    /// Limit of `n · hs_shell(n)`; the `Ḣ^s` series behaves like this
    /// constant times the harmonic series.
    pub fn hs_shell_constant(&self) -> f64 {
        2.0 * PI
    }
}

/// Partial sums of the three shell series.
#[derive(Clone, Debug, PartialEq)]
pub struct StaircaseReport {
    pub spec: StaircaseSpec,
    /// `(N, Σ_{n≤N} F^{1,1} shell)` at decades up to `n_shells`.
    pub f11_partial: Vec<(u64, f64)>,
    pub l2_partial: Vec<(u64, f64)>,
    pub hs_partial: Vec<(u64, f64)>,
    /// Sum of the `F^{1,1}` shells beyond `tail_start`, the part beyond
    /// `n_shells` estimated by the integral of the leading power.
    pub f11_tail: f64,
    pub f11_total: f64,
    pub tail_start: u64,
    pub hs_constant: f64,
}

impl StaircaseReport {
    pub fn f11_tail_ratio(&self) -> f64 {
        self.f11_tail / self.f11_total
    }

    /// `S(N₂) − S(N₁)` of the `Ḣ^s` series between two recorded decades.
    pub fn hs_growth(&self, from: u64, to: u64) -> Option<f64> {
        let at = |n| self.hs_partial.iter().find(|(m, _)| *m == n).map(|(_, v)| *v);
        Some(at(to)? - at(from)?)
    }
}

/// Partial sums of the counterexample's norms, with the `F^{1,1}` tail
/// measured beyond `tail_start` shells.
pub fn staircase(spec: &StaircaseSpec, tail_start: u64) -> Result<StaircaseReport, StaircaseError> {
    spec.validate()?;
    let mut f11 = 0.0;
    let mut l2 = 0.0;
    let mut hs = 0.0;
    let mut f11_at_tail = 0.0;
    let (mut f11_partial, mut l2_partial, mut hs_partial) = (Vec::new(), Vec::new(), Vec::new());
    let mut next_decade = 1u64;
    for n in 1..=spec.n_shells {
        f11 += spec.f11_shell(n);
        l2 += spec.l2_shell(n);
        hs += spec.hs_shell(n);
        if n == tail_start {
            f11_at_tail = f11;
        }
        if n == next_decade || n == spec.n_shells {
            f11_partial.push((n, f11));
            l2_partial.push((n, l2));
            hs_partial.push((n, hs));
            if n == next_decade {
                next_decade = next_decade.saturating_mul(10);
            }
        }
    }
    // Remainder beyond the last shell: ∫_{N+1/2}^∞ of the leading power 2π n^{p}.
    let p = spec.f11_exponent();
    let edge = spec.n_shells as f64 + 0.5;
    let remainder = 2.0 * PI * edge.powf(p + 1.0) / -(p + 1.0);
    let total = f11 + remainder;
    let tail = if tail_start >= spec.n_shells { remainder } else { total - f11_at_tail };
    Ok(StaircaseReport {
        spec: *spec,
        f11_partial,
        l2_partial,
        hs_partial,
        f11_tail: tail,
        f11_total: total,
        tail_start,
        hs_constant: spec.hs_shell_constant(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> StaircaseSpec {
        StaircaseSpec { sigma_exp: 2.0, delta_exp: 1.0, gamma_exp: 4.5, s_target: 0.25, n_shells: 10_000 }
    }

    #[test]
    fn reference_exponents_satisfy_constraints() {
        let s = reference();
        assert_eq!(s.f11_exponent(), -1.5);
        assert_eq!(s.hs_exponent(), -1.0);
        assert!(s.validate().is_ok());
    }

    #[test]
    fn rejects_non_borderline() {
        let s = StaircaseSpec { gamma_exp: 5.0, ..reference() };
        assert!(matches!(s.validate(), Err(StaircaseError::ConstraintViolated(_))));
    }

    #[test]
    fn shells_follow_leading_powers() {
        let s = reference();
        let n = 1_000_000u64;
        let nf = n as f64;
        assert!((s.f11_shell(n) / (2.0 * PI * nf.powf(-1.5)) - 1.0).abs() < 1e-5);
        assert!((s.hs_shell(n) * nf / s.hs_shell_constant() - 1.0).abs() < 1e-5);
    }
}
