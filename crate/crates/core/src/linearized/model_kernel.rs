//! Kernel of `−Δφ = 8(1+γ)²|y|^{2γ}(1+|y|^{2(1+γ)})⁻²φ` on a truncated disk or
//! half-disk with Neumann data, counted from Fourier modes.

use crate::surface::quadrature::gauss_legendre_on;
use crate::{Error, Result};
use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::{Mat, Par, Side};

/// Smallest admissible truncation radius.
pub const MIN_RADIUS: f64 = 50.0;
/// Eigenvalues this close to `1` count as kernel.
pub const GAP_TOL: f64 = 0.05;
/// Highest Fourier mode examined.
const MAX_MODE: usize = 12;
/// Uniform cells on `[0, 2]`, then geometric cells with this ratio.
const INNER_CELLS: usize = 80;
const GROWTH: f64 = 1.04;

/// Outcome of [`model_kernel_dimension`].
#[derive(Clone, Debug, PartialEq)]
pub struct KernelDimension {
    pub count: usize,
    /// `(mode, μ)` for each eigenvalue counted, one entry per Fourier mode.
    pub near_one: Vec<(usize, f64)>,
    /// Distance from `1` of the closest eigenvalue not counted.
    pub gap: f64,
    /// An uncounted eigenvalue lies within twice the tolerance of `1`.
    pub inconclusive: bool,
}

fn nodes(radius: f64) -> Vec<f64> {
    let mut r: Vec<f64> = (0..=INNER_CELLS).map(|i| 2.0 * i as f64 / INNER_CELLS as f64).collect();
    let mut dr = 2.0 / INNER_CELLS as f64;
    while *r.last().unwrap() < radius {
        dr *= GROWTH;
        let next = (r.last().unwrap() + dr).min(radius);
        if radius - next < 0.5 * dr {
            r.push(radius);
        } else {
            r.push(next);
        }
    }
    r
}

/// Generalized eigenvalues of mode `k`, ascending.
fn mode_spectrum(gamma: f64, k: usize, r: &[f64]) -> Result<Vec<f64>> {
    let a = 1.0 + gamma;
    let weight = |s: f64| {
        let t = s.powf(2.0 * a);
        8.0 * a * a * s.powf(2.0 * gamma) / ((1.0 + t) * (1.0 + t))
    };
    let n = r.len();
    let mut stiff = Mat::<f64>::zeros(n, n);
    let mut mass = Mat::<f64>::zeros(n, n);
    let k2 = (k * k) as f64;
    for e in 0..n - 1 {
        let (r0, r1) = (r[e], r[e + 1]);
        let len = r1 - r0;
        let (xs, ws) = gauss_legendre_on::<f64>(6, r0, r1);
        for (&s, &w) in xs.iter().zip(&ws) {
            let phi = [(r1 - s) / len, (s - r0) / len];
            let dphi = [-1.0 / len, 1.0 / len];
            for i in 0..2 {
                for j in 0..2 {
                    stiff[(e + i, e + j)] += w * (dphi[i] * dphi[j] * s + k2 * phi[i] * phi[j] / s);
                    mass[(e + i, e + j)] += w * weight(s) * phi[i] * phi[j] * s;
                }
            }
        }
    }
    // Modes k ≥ 1 vanish at the origin.
    let skip = usize::from(k > 0);
    let m = n - skip;
    let a_mat = Mat::from_fn(m, m, |i, j| stiff[(i + skip, j + skip)]);
    let m_mat = Mat::from_fn(m, m, |i, j| mass[(i + skip, j + skip)]);
    let llt = m_mat
        .llt(Side::Lower)
        .map_err(|e| Error::Spectral { message: format!("weighted mass is not positive definite: {e:?}"), log: Vec::new() })?;
    let mut x = a_mat;
    solve_lower_triangular_in_place(llt.L(), x.as_mut(), Par::Seq);
    let mut c = x.transpose().to_owned();
    solve_lower_triangular_in_place(llt.L(), c.as_mut(), Par::Seq);
    let c = Mat::from_fn(m, m, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let ev = c
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Spectral { message: format!("eigensolver failed: {e:?}"), log: Vec::new() })?;
    let mut ev: Vec<f64> = ev.into_iter().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Counts eigenvalues `μ` with `|μ − 1| < 0.05`. Modes `k ≥ 1` count twice on
/// the full disk (cosine and sine) and once on the half-disk, where the
/// Neumann condition on the diameter keeps only cosines.
pub fn model_kernel_dimension(gamma: f64, radius: f64, half: bool) -> Result<KernelDimension> {
    if !(gamma > -1.0) || (gamma > 0.0 && gamma.fract() == 0.0) {
        return Err(Error::Parameter(format!("γ = {gamma} must lie in (−1, ∞) and not be a positive integer")));
    }
    if !(radius >= MIN_RADIUS) {
        return Err(Error::Parameter(format!("truncation radius {radius} is below {MIN_RADIUS}")));
    }
    let r = nodes(radius);
    let mut out = KernelDimension { count: 0, near_one: Vec::new(), gap: f64::INFINITY, inconclusive: false };
    for k in 0..=MAX_MODE {
        let ev = mode_spectrum(gamma, k, &r)?;
        for &mu in &ev {
            let d = (mu - 1.0).abs();
            if d < GAP_TOL {
                out.count += if k > 0 && !half { 2 } else { 1 };
                out.near_one.push((k, mu));
            } else {
                out.gap = out.gap.min(d);
                out.inconclusive |= d < 2.0 * GAP_TOL;
            }
        }
        if ev.first().is_some_and(|&mu| mu > 1.0 + 2.0 * GAP_TOL) {
            return Ok(out);
        }
    }
    Err(Error::Spectral { message: format!("mode {MAX_MODE} still has eigenvalues below 1"), log: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        for (gamma, half, expected) in [(0.0, false, 3), (0.0, true, 2), (0.5, false, 1), (0.5, true, 1), (-0.5, false, 1), (2.5, true, 1)] {
            let d = model_kernel_dimension(gamma, 100.0, half).unwrap();
            assert_eq!(d.count, expected, "{gamma} {half} {d:?}");
            assert!(!d.inconclusive, "{d:?}");
        }
    }

    #[test]
    fn radial_kernel_is_resolved() {
        // z₀ = (1 − r^{2a})/(1 + r^{2a}) sits at μ = 1; the constant at μ = 0.
        let ev = mode_spectrum(1.5, 0, &nodes(100.0)).unwrap();
        assert!(ev[0].abs() < 1e-6, "{}", ev[0]);
        assert!((ev[1] - 1.0).abs() < 1e-2, "{}", ev[1]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(model_kernel_dimension(0.0, 20.0, false), Err(Error::Parameter(_))));
        assert!(matches!(model_kernel_dimension(1.0, 100.0, false), Err(Error::Parameter(_))));
        assert!(matches!(model_kernel_dimension(-1.0, 100.0, false), Err(Error::Parameter(_))));
    }
}
