//! One-dimensional Gauss–Legendre rules and triangle rules built from them.

use crate::Real;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1);
    let mut x = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    let m = n.div_ceil(2);
    let nn = T::n(n);
    for i in 0..m {
        let mut z = (T::PI() * (T::n(i) + T::c(0.75)) / (nn + T::c(0.5))).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (mut p0, mut p1) = (T::one(), z);
            for k in 2..=n {
                let k_t = T::n(k);
                let p2 = ((T::c(2.0) * k_t - T::one()) * z * p1 - (k_t - T::one()) * p0) / k_t;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { T::one() } else { p0 };
            dp = nn * (z * pn - pm) / (z * z - T::one());
            if n == 1 {
                dp = T::one();
            }
            let dz = pn / dp;
            z -= dz;
            if dz.abs() <= T::epsilon() * T::c(4.0) {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = T::c(2.0) / ((T::one() - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n == 1 {
        x[0] = T::zero();
        w[0] = T::c(2.0);
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on<T: Real>(n: usize, a: T, b: T) -> (Vec<T>, Vec<T>) {
    let (x, w) = gauss_legendre::<T>(n);
    let h = (b - a) / T::c(2.0);
    let m = (a + b) / T::c(2.0);
    (x.iter().map(|&t| m + h * t).collect(), w.iter().map(|&v| v * h).collect())
}

/// Collapsed-square rule on the reference triangle with apex at vertex 0.
///
/// Returns barycentric coordinates and weights summing to one (area
/// normalized). With `alpha = 0` the rule integrates polynomials of degree
/// `2n − 2` exactly. A nonzero `alpha > -2` tailors the radial variable to
/// integrands behaving like `dist(apex)^alpha`.
pub fn triangle_rule<T: Real>(n: usize, alpha: T) -> Vec<([T; 3], T)> {
    let (u, wu) = gauss_legendre_on::<T>(n, T::zero(), T::one());
    let (t, wt) = gauss_legendre_on::<T>(n, T::zero(), T::one());
    let p = T::one() / (alpha + T::c(2.0));
    let mut out = Vec::with_capacity(n * n);
    for (&ui, &wui) in u.iter().zip(&wu) {
        // s = u^p so that s^{alpha+1} ds = p du.
        let s = if alpha == T::zero() { ui } else { ui.powf(p) };
        let ds_du = if alpha == T::zero() { T::one() } else { p * ui.powf(p - T::one()) };
        for (&tj, &wtj) in t.iter().zip(&wt) {
            let b1 = s * (T::one() - tj);
            let b2 = s * tj;
            let b0 = T::one() - b1 - b2;
            out.push(([b0, b1, b2], T::c(2.0) * wui * wtj * s * ds_du));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_weights_and_moments() {
        for n in 1..12 {
            let (x, w) = gauss_legendre::<f64>(n);
            let total: f64 = w.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "n={n}");
            for k in 0..(2 * n) {
                let m: f64 = x.iter().zip(&w).map(|(a, b)| a.powi(k as i32) * b).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((m - exact).abs() < 1e-12, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn triangle_rule_polynomial_exactness() {
        let rule = triangle_rule::<f64>(4, 0.0);
        let sum: f64 = rule.iter().map(|r| r.1).sum();
        assert!((sum - 1.0).abs() < 1e-14);
        // ∫ b1^a b2^b over the unit-area-normalized triangle = 2 a! b! / (a+b+2)!
        let fact = |k: u32| (1..=k).map(|v| v as f64).product::<f64>();
        for a in 0..4u32 {
            for b in 0..(6 - a) {
                let q: f64 = rule.iter().map(|(l, w)| l[1].powi(a as i32) * l[2].powi(b as i32) * w).sum();
                let exact = 2.0 * fact(a) * fact(b) / fact(a + b + 2);
                assert!((q - exact).abs() < 1e-13, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn graded_rule_integrates_power_weight() {
        // ∫ over triangle (0,0),(1,0),(0,1) of |x|^alpha with alpha = -1.
        let alpha = -1.0;
        let rule = triangle_rule::<f64>(16, alpha);
        let q: f64 = rule
            .iter()
            .map(|(l, w)| {
                let (x, y) = (l[1], l[2]);
                (x * x + y * y).sqrt().powf(alpha) * w * 0.5
            })
            .sum();
        // Polar integral: ∫_0^{π/2} ∫_0^{1/(cos+sin)} r^{alpha+1} dr dθ.
        let (th, wth) = gauss_legendre_on::<f64>(60, 0.0, std::f64::consts::FRAC_PI_2);
        let exact: f64 = th
            .iter()
            .zip(&wth)
            .map(|(t, w)| w * (1.0 / (t.cos() + t.sin())).powf(alpha + 2.0) / (alpha + 2.0))
            .sum();
        assert!((q - exact).abs() < 1e-10, "{q} vs {exact}");
    }
}
