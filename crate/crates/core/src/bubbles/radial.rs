//! Graded radial and chart-polar quadrature for integrands concentrated at
//! scale `1/λ` around a chart centre.

use crate::surface::quadrature::gauss_legendre_on;
use crate::surface::Chart;
use crate::{Point, Real};

/// Gauss points per radial panel.
pub const RADIAL_POINTS: usize = 16;

/// Nodes and weights for `∫₀^{rmax} f(ρ) dρ`.
///
/// The first panel `[0, s]` uses `ρ = s·u^p`, which turns an endpoint
/// behaviour `ρ^{2/p − 1}` into a polynomial; later panels double in length
/// until `rmax`.
pub fn radial_rule<T: Real>(rmax: T, scale: T, p: T, n: usize) -> Vec<(T, T)> {
    let mut out = Vec::new();
    let (us, wu) = gauss_legendre_on::<T>(n, T::zero(), T::one());
    let first = scale.min(rmax);
    for (&u, &w) in us.iter().zip(&wu) {
        out.push((first * u.powf(p), w * first * p * u.powf(p - T::one())));
    }
    let mut a = first;
    while a < rmax {
        let b = (a * T::c(2.0)).min(rmax);
        let (xs, ws) = gauss_legendre_on::<T>(n, a, b);
        out.extend(xs.into_iter().zip(ws));
        a = b;
    }
    out
}

/// `∫₀^∞ f(ρ) dρ` for integrands decaying at least like `ρ^{−1−κ}`, `κ > 0`,
/// truncated at `1e12·scale`.
pub fn radial_rule_infinite<T: Real>(scale: T, p: T, n: usize) -> Vec<(T, T)> {
    radial_rule(scale * T::c(1e12), scale, p, n)
}

/// A chart-polar quadrature node.
#[derive(Clone, Copy, Debug)]
pub struct PolarNode {
    /// Chart coordinate.
    pub y: Point,
    pub rho: f64,
    /// Ambient point.
    pub x: Point,
    /// Weight for `dy`.
    pub w: f64,
    /// `φ̂_ξ(y)`; `dv_g = e^{φ̂} dy`.
    pub phi: f64,
}

/// Polar nodes covering `|y| < rmax` in the chart image, graded at scale `scale`.
pub fn polar_nodes(chart: &Chart, rmax: f64, scale: f64, p: f64, n_t: usize) -> Vec<PolarNode> {
    let radial = radial_rule(rmax, scale, p, RADIAL_POINTS);
    let extent = chart.angular_extent();
    let panels = 4;
    let (ts, wt) = gauss_legendre_on::<f64>(n_t, 0.0, extent / panels as f64);
    let mut out = Vec::with_capacity(radial.len() * n_t * panels);
    for &(rho, wr) in &radial {
        for k in 0..panels {
            let t0 = k as f64 * extent / panels as f64;
            for (&t, &w) in ts.iter().zip(&wt) {
                let a = t0 + t;
                let y = [rho * a.cos(), rho * a.sin()];
                let (x, phi) = {
                    let x = chart.from_chart(y);
                    (x, chart.local(x).1)
                };
                out.push(PolarNode { y, rho, x, w: wr * w * rho, phi });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn power_moments(gamma in -0.9f64..2.5, lambda in 1.0f64..1e5) {
            // ∫₀^1 ρ^{2γ+1}/(1 + (λρ)^{2(1+γ)}) dρ with u = (λρ)^{2(1+γ)}:
            // λ^{−2(1+γ)} ln(1 + λ^{2(1+γ)}) / (2(1+γ)).
            let a = 1.0 + gamma;
            let exact = lambda.powf(-2.0 * a) * lambda.powf(2.0 * a).ln_1p() / (2.0 * a);
            let rule = radial_rule(1.0, 1.0 / lambda, 2.0 / a, RADIAL_POINTS);
            let got: f64 = rule.iter().map(|&(r, w)| w * r.powf(2.0 * gamma + 1.0) / (1.0 + (lambda * r).powf(2.0 * a))).sum();
            prop_assert!((got / exact - 1.0).abs() < 1e-9, "{} {}", got, exact);
        }
    }

    #[test]
    fn logarithmic_endpoint() {
        // ∫₀^1 ρ ln ρ dρ = −1/4.
        let rule = radial_rule(1.0f64, 1e-3, 2.0, RADIAL_POINTS);
        let got: f64 = rule.iter().map(|&(r, w)| w * r * r.ln()).sum();
        assert!((got + 0.25).abs() < 1e-12, "{got}");
    }
}
