//! Radial bubble profiles and their scale constants.

use super::radial::{radial_rule, RADIAL_POINTS};
use crate::{Error, Real, Result};

/// Logistic `1/(1+e^{s})`, evaluated without overflow.
fn inv_one_plus_exp<T: Real>(s: T) -> T {
    if s > T::zero() {
        let e = (-s).exp();
        e / (T::one() + e)
    } else {
        T::one() / (T::one() + s.exp())
    }
}

/// `ln(1 + e^{s})` without overflow.
fn softplus<T: Real>(s: T) -> T {
    if s > T::zero() {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

/// Singular bubble `δ^γ_λ(ρ) = ln(8(1+γ)² λ^{2(1+γ)} / (1 + (λρ)^{2(1+γ)})²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BubbleProfile<T> {
    pub gamma: T,
}

impl<T: Real> BubbleProfile<T> {
    /// Fails for `γ ≤ −1` and for non-finite input.
    pub fn new(gamma: T) -> Result<Self> {
        if !(gamma > -T::one()) || !gamma.is_finite() {
            return Err(Error::Validation(format!("bubble exponent γ = {gamma} must exceed −1")));
        }
        Ok(BubbleProfile { gamma })
    }

    /// `1 + γ`.
    pub fn a(&self) -> T {
        T::one() + self.gamma
    }

    /// `ln t` with `t = (λρ)^{2(1+γ)}`.
    pub fn log_t(&self, lambda: T, rho: T) -> T {
        T::c(2.0) * self.a() * (lambda * rho).ln()
    }

    /// `δ^γ_λ(ρ)`.
    pub fn delta(&self, lambda: T, rho: T) -> T {
        let a = self.a();
        (T::c(8.0) * a * a).ln() + T::c(2.0) * a * lambda.ln() - T::c(2.0) * softplus(self.log_t(lambda, rho))
    }

    /// `ln(|y|^{2γ} e^{δ})`, finite for `ρ > 0`.
    pub fn log_weighted_density(&self, lambda: T, rho: T) -> T {
        T::c(2.0) * self.gamma * rho.ln() + self.delta(lambda, rho)
    }

    /// Tail `L = ln(1 + 1/t)` with its radial derivative.
    ///
    /// `δ = ln(8(1+γ)²λ^{−2(1+γ)}) − 4(1+γ) ln ρ − 2L`.
    pub fn tail(&self, lambda: T, rho: T) -> (T, T) {
        let lt = self.log_t(lambda, rho);
        let l = softplus(-lt);
        let dl = -T::c(2.0) * self.a() * inv_one_plus_exp(lt) / rho;
        (l, dl)
    }

    /// Shifted radial kernel element `ẑ = z₀^γ(λρ) + 2(1+γ) = 4(1+γ)/(1+t)` and its radial derivative.
    pub fn z0_shifted(&self, lambda: T, rho: T) -> (T, T) {
        let a = self.a();
        let lt = self.log_t(lambda, rho);
        let s = inv_one_plus_exp(lt);
        let v = T::c(4.0) * a * s;
        // dt/dρ = 2a t/ρ and t/(1+t)² = s(1 − s).
        let dv = -T::c(8.0) * a * a * s * (T::one() - s) / rho;
        (v, dv)
    }

    /// `z₀^γ(λρ) = 2(1+γ)(1 − t)/(1 + t)`.
    pub fn z0(&self, lambda: T, rho: T) -> T {
        self.z0_shifted(lambda, rho).0 - T::c(2.0) * self.a()
    }
}

/// Translation kernel element `z_j(λy) = 4λy_j/(1 + λ²|y|²)` with its gradient in `y`.
pub fn zj<T: Real>(j: usize, lambda: T, y: [T; 2]) -> (T, [T; 2]) {
    let u = [lambda * y[0], lambda * y[1]];
    let q = T::one() + u[0] * u[0] + u[1] * u[1];
    let v = T::c(4.0) * u[j] / q;
    let mut g = [T::zero(); 2];
    for (k, gk) in g.iter_mut().enumerate() {
        let kron = if k == j { q } else { T::zero() };
        *gk = lambda * T::c(4.0) * (kron - T::c(2.0) * u[j] * u[k]) / (q * q);
    }
    (v, g)
}

/// Scale constants `ε₀`, `ε₁` and `c(γ)` of the projected bubble expansion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleConstants<T> {
    pub gamma: T,
    pub lambda: T,
    pub eps0: T,
    pub eps1: T,
}

/// `c(γ) = ∫₀^∞ ln(1 + s^{−(1+γ)}) ds = π csc(π/(1+γ))` for `γ > 0`.
///
/// Integration by parts turns the integral into `(1+γ)∫₀^∞ ds/(1 + s^{1+γ})`.
pub fn c_gamma<T: Real>(gamma: T) -> Result<T> {
    Ok((T::one() + gamma) * c_gamma_reduced(gamma)?)
}

/// `(π/(1+γ)) csc(π/(1+γ)) = ∫₀^∞ ds/(1 + s^{1+γ})`, which is `c(γ)/(1+γ)`.
pub fn c_gamma_reduced<T: Real>(gamma: T) -> Result<T> {
    if !(gamma > T::zero()) {
        return Err(Error::Domain(format!("c(γ) needs γ > 0, got {gamma}")));
    }
    let x = T::PI() / (T::one() + gamma);
    Ok(x / x.sin())
}

/// `∫₀^∞ ln(1 + s^{−(1+γ)}) ds` by graded quadrature on `[0, S]` plus the
/// alternating tail series beyond `S`.
pub fn c_gamma_quadrature<T: Real>(gamma: T) -> Result<T> {
    if !(gamma > T::zero()) {
        return Err(Error::Domain(format!("c(γ) needs γ > 0, got {gamma}")));
    }
    let a = T::one() + gamma;
    let cut = T::c(1e4);
    let body = radial_rule(cut, T::one(), T::c(4.0), 2 * RADIAL_POINTS)
        .into_iter()
        .fold(T::zero(), |acc, (s, w)| acc + w * s.powf(-a).ln_1p());
    // ∫_S^∞ s^{−ak} ds = S^{1−ak}/(ak − 1); terms fall like S^{−a}.
    let mut tail = T::zero();
    for k in 1..=12 {
        let kf = T::c(k as f64);
        let sign = if k % 2 == 1 { T::one() } else { -T::one() };
        tail = tail + sign * cut.powf(T::one() - a * kf) / (kf * (a * kf - T::one()));
    }
    Ok(body + tail)
}

impl<T: Real> ScaleConstants<T> {
    /// Constants for weight `γ`, scale `λ > 1`, coefficient `ϱ` and area `|Σ|`.
    ///
    /// `ε₀` carries the factor `1/|Σ|` of the zero-mean normalization.
    pub fn new(gamma: T, lambda: T, varrho: T, area: T) -> Result<Self> {
        if !(lambda > T::one()) {
            return Err(Error::Parameter(format!("scale constants need λ > 1, got {lambda}")));
        }
        BubbleProfile::new(gamma)?;
        let two = T::c(2.0);
        let (eps0, eps1) = if gamma > T::zero() {
            (
                varrho * c_gamma(gamma)? * lambda.powi(-2) / (T::c(4.0) * area),
                lambda.powf(-two * (T::one() + gamma)) * lambda.ln(),
            )
        } else if gamma == T::zero() {
            (varrho / (two * area) * lambda.powi(-2) * lambda.ln(), lambda.powi(-2))
        } else {
            (T::zero(), lambda.powf(-two * (T::one() + gamma)))
        };
        Ok(ScaleConstants { gamma, lambda, eps0, eps1 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn peak_value() {
        let b = BubbleProfile::new(0.0).unwrap();
        assert!((b.delta(1.0, 0.0) - 8f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn c_gamma_values() {
        assert!((c_gamma(1.0f64).unwrap() - PI).abs() < 1e-14);
        assert!((c_gamma(3.0f64).unwrap() - PI * 2f64.sqrt()).abs() < 1e-14);
        assert!((c_gamma_reduced(1.0f64).unwrap() - PI / 2.0).abs() < 1e-14);
        assert!((c_gamma_reduced(3.0f64).unwrap() - PI * 2f64.sqrt() / 4.0).abs() < 1e-14);
        assert!(c_gamma(0.0f64).is_err());
        assert!(c_gamma(-0.5f64).is_err());
    }

    #[test]
    fn c_gamma_integral_matches_closed_form() {
        for gamma in [0.25f64, 0.5, 1.0, 2.0, 5.0] {
            let q = c_gamma_quadrature(gamma).unwrap();
            assert!((q / c_gamma(gamma).unwrap() - 1.0).abs() < 1e-9, "{gamma}: {q}");
        }
        // ∫ ln(1 + 1/s²) ds = π.
        assert!((c_gamma_quadrature(1.0f64).unwrap() - PI).abs() < 1e-10);
    }

    #[test]
    fn scale_constant_cases() {
        let s = ScaleConstants::new(-0.5, 10.0, 8.0 * PI, PI).unwrap();
        assert_eq!(s.eps0, 0.0);
        assert!((s.eps1 - 0.1).abs() < 1e-15);
        let s = ScaleConstants::new(0.0, 10.0, 8.0 * PI, PI).unwrap();
        assert!((s.eps0 - 4.0 * 0.01 * 10f64.ln()).abs() < 1e-15);
        assert!(ScaleConstants::new(0.5, 1.0, 8.0 * PI, PI).is_err());
        assert!(BubbleProfile::new(-1.0).is_err());
    }

    #[test]
    fn tail_splits_the_bubble() {
        let b = BubbleProfile::new(0.7).unwrap();
        let (lam, rho): (f64, f64) = (13.0, 0.21);
        let a = 1.7;
        let (l, _) = b.tail(lam, rho);
        let rebuilt = (8.0 * a * a * lam.powf(-2.0 * a)).ln() - 4.0 * a * rho.ln() - 2.0 * l;
        assert!((rebuilt - b.delta(lam, rho)).abs() < 1e-12);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let b = BubbleProfile::new(-0.4f64).unwrap();
        let (lam, h): (f64, f64) = (7.0, 1e-6);
        for rho in [0.05, 0.2, 0.6] {
            let fd = (b.tail(lam, rho + h).0 - b.tail(lam, rho - h).0) / (2.0 * h);
            assert!((fd - b.tail(lam, rho).1).abs() < 1e-6 * (1.0 + fd.abs()));
            let fd = (b.z0_shifted(lam, rho + h).0 - b.z0_shifted(lam, rho - h).0) / (2.0 * h);
            assert!((fd - b.z0_shifted(lam, rho).1).abs() < 1e-6 * (1.0 + fd.abs()));
        }
        let y: [f64; 2] = [0.03, -0.05];
        for j in 0..2 {
            let (_, g) = zj(j, lam, y);
            let fx = (zj(j, lam, [y[0] + h, y[1]]).0 - zj(j, lam, [y[0] - h, y[1]]).0) / (2.0 * h);
            let fy = (zj(j, lam, [y[0], y[1] + h]).0 - zj(j, lam, [y[0], y[1] - h]).0) / (2.0 * h);
            assert!((fx - g[0]).abs() < 1e-6 && (fy - g[1]).abs() < 1e-6);
        }
    }

    #[test]
    fn extreme_arguments_stay_finite() {
        let b = BubbleProfile::new(2.5f64).unwrap();
        for (lam, rho) in [(1e6, 1.0), (1e6, 1e-12), (1.0, 1e-300)] {
            assert!(b.delta(lam, rho).is_finite());
            let (l, dl) = b.tail(lam, rho);
            assert!(l.is_finite() && dl.is_finite());
        }
        let f = BubbleProfile::new(0.5f32).unwrap();
        assert!((f.z0(1.0, 1.0)).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn z0_range(g in -0.95f64..4.0, lam in 1.0f64..1e3, rho in 1e-6f64..2.0) {
            let b = BubbleProfile::new(g).unwrap();
            let z = b.z0(lam, rho);
            prop_assert!(z.abs() <= 2.0 * (1.0 + g) + 1e-12);
        }

        #[test]
        fn c_gamma_matches_quadrature(g in 0.3f64..3.0) {
            // s = e^x maps the integral to the line; the integrand decays like
            // e^{x} on the left and e^{-(a-1)x} on the right.
            let a = 1.0 + g;
            let (lo, hi, dx) = (-40.0, 40.0 / (a - 1.0), 1e-3);
            let n = ((hi - lo) / dx) as usize;
            let f = |x: f64| x.exp() * (-a * x).exp().ln_1p();
            let mut q = 0.5 * (f(lo) + f(lo + n as f64 * dx));
            for k in 1..n {
                q += f(lo + k as f64 * dx);
            }
            q *= dx;
            prop_assert!((q - c_gamma(g).unwrap()).abs() < 1e-8 * q);
        }
    }
}
