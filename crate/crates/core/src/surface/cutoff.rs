//! Radial cutoff profiles: identically one on `[0, 1]`, zero beyond 2.

use crate::Real;
use std::marker::PhantomData;

/// Polynomial blend used on the transition `1 < s < 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CutoffKind {
    /// `1 − (10t³ − 15t⁴ + 6t⁵)`, C².
    #[default]
    Quintic,
    /// `1 − (35t⁴ − 84t⁵ + 70t⁶ − 20t⁷)`, C³.
    Septic,
}

/// Cutoff profile χ evaluated through `|s|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffProfile<T> {
    pub kind: CutoffKind,
    _t: PhantomData<T>,
}

impl<T: Real> Default for CutoffProfile<T> {
    fn default() -> Self {
        Self::new(CutoffKind::Quintic)
    }
}

impl<T: Real> CutoffProfile<T> {
    pub fn new(kind: CutoffKind) -> Self {
        CutoffProfile { kind, _t: PhantomData }
    }

    /// Returns `(P(t), P'(t), P''(t))` for the blend on `t ∈ [0, 1]`.
    fn blend(&self, t: T) -> (T, T, T) {
        let c = T::c;
        match self.kind {
            CutoffKind::Quintic => {
                let t2 = t * t;
                let t3 = t2 * t;
                (
                    t3 * (c(10.0) - c(15.0) * t + c(6.0) * t2),
                    c(30.0) * t2 * (T::one() - t) * (T::one() - t),
                    c(60.0) * t * (T::one() - t) * (T::one() - c(2.0) * t),
                )
            }
            CutoffKind::Septic => {
                let t2 = t * t;
                let t3 = t2 * t;
                let t4 = t3 * t;
                (
                    t4 * (c(35.0) - c(84.0) * t + c(70.0) * t2 - c(20.0) * t3),
                    c(140.0) * t3 * (T::one() - t).powi(3),
                    c(420.0) * t2 * (T::one() - t).powi(2) * (T::one() - c(2.0) * t),
                )
            }
        }
    }

    /// χ(s).
    pub fn value(&self, s: T) -> T {
        self.eval(s).0
    }

    /// `(χ, χ', χ'')` at `s ≥ 0`.
    pub fn eval(&self, s: T) -> (T, T, T) {
        let s = s.abs();
        if s <= T::one() {
            (T::one(), T::zero(), T::zero())
        } else if s >= T::c(2.0) {
            (T::zero(), T::zero(), T::zero())
        } else {
            let (p, dp, ddp) = self.blend(s - T::one());
            (T::one() - p, -dp, -ddp)
        }
    }

    /// Radial instantiation `x ↦ χ(a·|x|)` in two dimensions.
    ///
    /// Returns the value, the radial derivative and the flat Laplacian at
    /// radius `rho`.
    pub fn radial(&self, rho: T, a: T) -> (T, T, T) {
        let (v, d1, d2) = self.eval(a * rho);
        let dr = a * d1;
        let lap = if rho > T::zero() { a * a * d2 + dr / rho } else { T::zero() };
        (v, dr, lap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn profiles() -> [CutoffProfile<f64>; 2] {
        [CutoffProfile::new(CutoffKind::Quintic), CutoffProfile::new(CutoffKind::Septic)]
    }

    #[test]
    fn plateaus() {
        for p in profiles() {
            assert_eq!(p.value(0.0), 1.0);
            assert_eq!(p.value(1.0), 1.0);
            assert_eq!(p.value(-0.7), 1.0);
            assert_eq!(p.value(2.0), 0.0);
            assert_eq!(p.value(5.0), 0.0);
            assert!((p.value(1.5) - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn twice_differentiable_at_junctions() {
        for p in profiles() {
            for s in [1.0, 2.0] {
                let (_, a1, a2) = p.eval(s - 1e-9);
                let (_, b1, b2) = p.eval(s + 1e-9);
                assert!((a1 - b1).abs() < 1e-6 && (a2 - b2).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for p in profiles() {
            for s in [1.1, 1.37, 1.5, 1.83] {
                let h = 1e-6;
                let fd1 = (p.value(s + h) - p.value(s - h)) / (2.0 * h);
                let fd2 = (p.eval(s + h).1 - p.eval(s - h).1) / (2.0 * h);
                assert!((fd1 - p.eval(s).1).abs() < 1e-7);
                assert!((fd2 - p.eval(s).2).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn single_precision_profile() {
        let p = CutoffProfile::<f32>::default();
        assert_eq!(p.value(0.5), 1.0);
        assert!((p.value(1.5) - 0.5).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn bounded_and_monotone(s in 0.0f64..3.0, d in 0.0f64..0.5) {
            for p in profiles() {
                let v = p.value(s);
                prop_assert!((0.0..=1.0).contains(&v));
                prop_assert!(p.value(s + d) <= v + 1e-15);
            }
        }
    }
}
