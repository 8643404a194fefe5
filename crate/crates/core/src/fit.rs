//! Least-squares slope fits.

use crate::{Error, Real, Result};

/// Result of a straight-line fit `y ≈ slope·x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeFit<T> {
    pub slope: T,
    pub intercept: T,
    pub r2: T,
}

/// Axis transform applied before fitting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitSpace {
    Linear,
    LogLog,
}

/// Fits a line through `(x, y)` pairs in the requested space.
///
/// Requires at least three points with strictly monotone `x`. In log-log
/// space both coordinates must be positive. A constant series has `R² = 1`.
pub fn fit_slope<T: Real>(points: &[(T, T)], space: FitSpace) -> Result<SlopeFit<T>> {
    if points.len() < 3 {
        return Err(Error::Parameter(format!("fit_slope needs at least 3 points, got {}", points.len())));
    }
    let inc = points.windows(2).all(|w| w[1].0 > w[0].0);
    let dec = points.windows(2).all(|w| w[1].0 < w[0].0);
    if !(inc || dec) {
        return Err(Error::Parameter("fit_slope needs strictly monotone x".into()));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(x, y) in points {
        let (u, v) = match space {
            FitSpace::Linear => (x, y),
            FitSpace::LogLog => {
                if x <= T::zero() || y <= T::zero() {
                    return Err(Error::Parameter("log-log fit needs positive data".into()));
                }
                (x.ln(), y.ln())
            }
        };
        if !u.is_finite() || !v.is_finite() {
            return Err(Error::Numeric("non-finite data in fit_slope".into()));
        }
        xs.push(u);
        ys.push(v);
    }
    let n = T::n(xs.len());
    let mx = xs.iter().fold(T::zero(), |a, &b| a + b) / n;
    let my = ys.iter().fold(T::zero(), |a, &b| a + b) / n;
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&u, &v) in xs.iter().zip(&ys) {
        sxx += (u - mx) * (u - mx);
        sxy += (u - mx) * (v - my);
        syy += (v - my) * (v - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut sse = T::zero();
    for (&u, &v) in xs.iter().zip(&ys) {
        let e = v - (slope * u + intercept);
        sse += e * e;
    }
    let scale = syy.max(my * my * T::c(1e-24));
    let r2 = if syy <= scale * T::epsilon() * T::c(16.0) || scale == T::zero() {
        T::one()
    } else {
        T::one() - sse / syy
    };
    Ok(SlopeFit { slope, intercept, r2 })
}

/// Least-squares solution of `A c ≈ b` for a small dense system given by rows.
pub fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    use faer::prelude::*;
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if m < n || n == 0 || rhs.len() != m {
        return Err(Error::Numeric(format!("least squares needs at least {n} rows, got {m}")));
    }
    let a = Mat::<f64>::from_fn(m, n, |i, j| rows[i][j]);
    let b = Col::<f64>::from_fn(m, |i| rhs[i]);
    let x = a.qr().solve_lstsq(&b);
    let out: Vec<f64> = (0..n).map(|i| x[i]).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("singular least-squares system".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_square_law() {
        let pts: Vec<(f64, f64)> = (1..6).map(|k| (k as f64, (k * k) as f64)).collect();
        let f = fit_slope(&pts, FitSpace::LogLog).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_series_has_zero_slope() {
        let pts = [(1.0f64, 3.0f64), (2.0, 3.0), (4.0, 3.0)];
        let f = fit_slope(&pts, FitSpace::Linear).unwrap();
        assert!(f.slope.abs() < 1e-14);
        assert_eq!(f.r2, 1.0);
    }

    #[test]
    fn too_few_points() {
        assert!(fit_slope(&[(1.0f64, 1.0), (2.0, 2.0)], FitSpace::Linear).is_err());
    }

    #[test]
    fn non_monotone_rejected() {
        assert!(fit_slope(&[(1.0f64, 1.0), (3.0, 2.0), (2.0, 2.0)], FitSpace::Linear).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let pts: Vec<(f32, f32)> = (1..5).map(|k| (k as f32, 3.0 * (k as f32).powi(3))).collect();
        let f = fit_slope(&pts, FitSpace::LogLog).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-4);
    }
}
