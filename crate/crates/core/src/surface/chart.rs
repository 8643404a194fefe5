//! Isothermal charts centred at surface points.
//!
//! A chart is the composition of a base map `M` (translation for interior
//! centres, Möbius boundary flattening for boundary centres) with a quadratic
//! normalization `w = c·y + b·y²` that fixes the value and gradient of the
//! pulled-back conformal factor at the origin.

use super::cutoff::CutoffProfile;
use super::model::{Location, SurfaceModel};
use super::quadrature::gauss_legendre_on;
use crate::{Point, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Base {
    Translation,
    /// Rotation `e^{-iθ}` taking the centre to `1`.
    Mobius(Complex64),
}

/// Isothermal chart `y_ξ` with conformal factor `φ̂_ξ`.
#[derive(Clone, Debug)]
pub struct Chart {
    pub center: Point,
    pub location: Location,
    /// Chart radius `r_ξ`; the chart covers `|y| < 2 r_ξ`.
    pub radius: f64,
    base: Base,
    c: f64,
    b: Complex64,
    model: SurfaceModel,
}

fn cx(p: Point) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn pt(z: Complex64) -> Point {
    [z.re, z.im]
}

const TWO_I: Complex64 = Complex64::new(0.0, 2.0);

impl Base {
    fn forward(&self, center: Point, x: Complex64) -> Complex64 {
        match self {
            Base::Translation => x - cx(center),
            Base::Mobius(rot) => {
                let w = x * rot;
                TWO_I * (1.0 - w) / (1.0 + w)
            }
        }
    }

    fn inverse(&self, center: Point, w: Complex64) -> Complex64 {
        match self {
            Base::Translation => w + cx(center),
            Base::Mobius(rot) => (TWO_I - w) / (TWO_I + w) / rot,
        }
    }

    /// Complex derivative of the inverse map.
    fn inverse_derivative(&self, w: Complex64) -> Complex64 {
        match self {
            Base::Translation => Complex64::new(1.0, 0.0),
            Base::Mobius(rot) => Complex64::new(0.0, -4.0) / ((TWO_I + w) * (TWO_I + w)) / rot,
        }
    }
}

/// Builds the chart of `model` centred at `xi`.
pub fn chart_at(model: &SurfaceModel, xi: Point) -> Result<Chart> {
    let location = model.locate(xi)?;
    let r = xi[0].hypot(xi[1]);
    let base = match location {
        Location::Interior => Base::Translation,
        Location::Boundary => Base::Mobius(Complex64::new(xi[0] / r, -xi[1] / r)),
    };
    let center = match location {
        Location::Interior => xi,
        Location::Boundary => [xi[0] / r, xi[1] / r],
    };
    if model.is_flat() {
        let radius = match location {
            Location::Interior => (0.5 * (1.0 - r)).min(0.5),
            Location::Boundary => 0.5,
        };
        return Ok(Chart {
            center,
            location,
            radius,
            base,
            c: 1.0,
            b: Complex64::new(0.0, 0.0),
            model: model.clone(),
        });
    }
    // Pulled-back factor Ψ(w) = ψ(M⁻¹ w) + 2 ln|M⁻¹'(w)| and its gradient at 0.
    let zero = Complex64::new(0.0, 0.0);
    let d = base.inverse_derivative(zero);
    let p = model.psi_grad(center);
    let psi0 = p.v + 2.0 * d.norm().ln();
    let dir = |v: Complex64| p.d[0] * v.re + p.d[1] * v.im;
    let (g1, mut g2) = (dir(d), dir(Complex64::i() * d));
    if let Base::Mobius(_) = base {
        // ∇(2 ln 4 − 4 ln|w + 2i|) at 0.
        g2 -= 2.0;
    }
    let c = (-0.5 * psi0).exp();
    let b = match location {
        Location::Interior => -(c * c / 4.0) * Complex64::new(g1, -g2),
        Location::Boundary => Complex64::new(-(c * c / 4.0) * g1, 0.0),
    };
    let limit = if b.norm() > 0.0 { c / (8.0 * b.norm()) } else { f64::INFINITY };
    let radius = match location {
        Location::Interior => (0.4 * (1.0 - r) / c).min(0.5).min(limit),
        Location::Boundary => (0.5 / c).min(0.5).min(limit),
    };
    Ok(Chart { center, location, radius, base, c, b, model: model.clone() })
}

impl Chart {
    /// `ϱ(ξ)`.
    pub fn varrho(&self) -> f64 {
        self.location.varrho()
    }

    pub fn is_boundary(&self) -> bool {
        self.location == Location::Boundary
    }

    /// Angular extent of the chart image: `2π` or `π`.
    pub fn angular_extent(&self) -> f64 {
        match self.location {
            Location::Interior => 2.0 * PI,
            Location::Boundary => PI,
        }
    }

    fn normalize_inverse(&self, w: Complex64) -> Complex64 {
        if self.b.norm() == 0.0 {
            return w / self.c;
        }
        2.0 * w / (self.c + (self.c * self.c + 4.0 * self.b * w).sqrt())
    }

    /// `y_ξ(x)`.
    pub fn to_chart(&self, x: Point) -> Point {
        let w = self.base.forward(self.center, cx(x));
        pt(self.normalize_inverse(w))
    }

    /// `y_ξ^{-1}(y)`.
    pub fn from_chart(&self, y: Point) -> Point {
        let y = cx(y);
        let w = self.c * y + self.b * y * y;
        pt(self.base.inverse(self.center, w))
    }

    /// Chart coordinate and `φ̂_ξ` at an ambient point.
    pub fn local(&self, x: Point) -> (Point, f64) {
        let w = self.base.forward(self.center, cx(x));
        let y = self.normalize_inverse(w);
        let dxdy = self.base.inverse_derivative(w) * (self.c + 2.0 * self.b * y);
        (pt(y), self.model.psi(x) + 2.0 * dxdy.norm().ln())
    }

    /// `φ̂_ξ(y)`.
    pub fn phi_hat(&self, y: Point) -> f64 {
        self.local(self.from_chart(y)).1
    }

    /// Ratio `|x − ξ| / |y_ξ(x)|`, continuous at the centre.
    pub fn distance_ratio(&self, x: Point) -> f64 {
        let y = cx(self.to_chart(x));
        let dx = cx(x) - cx(self.center);
        if y.norm() > 0.0 {
            dx.norm() / y.norm()
        } else {
            (self.base.inverse_derivative(Complex64::new(0.0, 0.0)) * self.c).norm()
        }
    }

    /// `χ_ξ(x) = χ(4|y_ξ(x)|/r_ξ)`.
    pub fn cutoff(&self, profile: &CutoffProfile<f64>, x: Point) -> f64 {
        let y = self.to_chart(x);
        profile.value(4.0 * y[0].hypot(y[1]) / self.radius)
    }

    /// Radial cutoff data `(χ, ∂_ρχ, Δ_yχ)` at chart radius `rho`.
    pub fn cutoff_radial(&self, profile: &CutoffProfile<f64>, rho: f64) -> (f64, f64, f64) {
        profile.radial(rho, 4.0 / self.radius)
    }

    /// `∫ f(y, |y|) dy` over the chart image of `|y| < rmax`.
    ///
    /// Uses `|y| = rmax·u²` in the radial direction, which absorbs logarithmic
    /// and mild power singularities at the centre.
    pub fn polar_integral<F: Fn(Point, f64) -> f64>(&self, rmax: f64, n_r: usize, n_t: usize, f: F) -> f64 {
        let (us, wu) = gauss_legendre_on::<f64>(n_r, 0.0, 1.0);
        let extent = self.angular_extent();
        let panels = 4;
        let (ts, wt) = gauss_legendre_on::<f64>(n_t, 0.0, extent / panels as f64);
        let mut total = 0.0;
        for (&u, &w) in us.iter().zip(&wu) {
            let rho = rmax * u * u;
            let jac = 2.0 * rmax * u * rho;
            let mut ring = 0.0;
            for p in 0..panels {
                let t0 = p as f64 * extent / panels as f64;
                for (&t, &v) in ts.iter().zip(&wt) {
                    let a = t0 + t;
                    ring += v * f([rho * a.cos(), rho * a.sin()], rho);
                }
            }
            total += w * jac * ring;
        }
        total
    }

    /// Whether `x` lies in the chart domain `|y| < 2r_ξ`.
    pub fn covers(&self, x: Point) -> bool {
        let w = self.base.forward(self.center, cx(x));
        if !w.re.is_finite() || !w.im.is_finite() {
            return false;
        }
        let y = self.normalize_inverse(w);
        y.norm() < 2.0 * self.radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use proptest::prelude::*;

    fn grad_phi_hat(ch: &Chart) -> [f64; 2] {
        let h = 1e-5;
        let f = |y: Point| ch.phi_hat(y);
        let (yp, ym) = if ch.is_boundary() { ([h, h], [-h, h]) } else { ([h, 0.0], [-h, 0.0]) };
        let gx = (f(yp) - f(ym)) / (2.0 * h);
        let gy = if ch.is_boundary() {
            (-3.0 * f([0.0, 0.0]) + 4.0 * f([0.0, h]) - f([0.0, 2.0 * h])) / (2.0 * h)
        } else {
            (f([0.0, h]) - f([0.0, -h])) / (2.0 * h)
        };
        [gx, gy]
    }

    #[test]
    fn flat_centre_is_identity() {
        let m = SurfaceModel::flat_disk();
        let ch = chart_at(&m, [0.0, 0.0]).unwrap();
        assert_eq!(ch.to_chart([0.3, -0.2]), [0.3, -0.2]);
        assert_eq!(ch.phi_hat([0.1, 0.4]), 0.0);
        assert_eq!(ch.radius, 0.5);
    }

    #[test]
    fn flat_boundary_chart() {
        let m = SurfaceModel::flat_disk();
        let ch = chart_at(&m, [1.0, 0.0]).unwrap();
        let y0 = ch.to_chart([1.0, 0.0]);
        assert!(y0[0].abs() < 1e-15 && y0[1].abs() < 1e-15);
        assert!(ch.phi_hat([0.0, 0.0]).abs() < 1e-14);
        let g = grad_phi_hat(&ch);
        assert!(g[0].abs() < 1e-6 && (g[1] + 2.0).abs() < 1e-6, "{g:?}");
        // Boundary points go to the real axis, interior to the upper half plane.
        let t: f64 = 0.4;
        assert!(ch.to_chart([t.cos(), t.sin()])[1].abs() < 1e-14);
        assert!(ch.to_chart([0.9, 0.1])[1] > 0.0);
        // Closed form 2 ln 4 − 4 ln|y + 2i|.
        let y: Point = [0.3, 0.2];
        let exact = 2.0 * 4f64.ln() - 4.0 * (y[0].hypot(y[1] + 2.0)).ln();
        assert!((ch.phi_hat(y) - exact).abs() < 1e-13);
    }

    #[test]
    fn conformal_normalization() {
        let m = SurfaceModel::conformal_disk(Expr::parse("0.3*x - 0.2*y^2 + 0.1*x*y").unwrap()).unwrap();
        for xi in [[0.2, -0.1], [0.0, 0.5]] {
            let ch = chart_at(&m, xi).unwrap();
            assert!(ch.phi_hat([0.0, 0.0]).abs() < 1e-13);
            let g = grad_phi_hat(&ch);
            assert!(g[0].abs() < 1e-6 && g[1].abs() < 1e-6, "{g:?}");
        }
        let t: f64 = 1.1;
        let ch = chart_at(&m, [t.cos(), t.sin()]).unwrap();
        assert!(ch.phi_hat([0.0, 0.0]).abs() < 1e-13);
        let g = grad_phi_hat(&ch);
        let kg = m.boundary_curvature(t);
        assert!(g[0].abs() < 1e-5 && (g[1] + 2.0 * kg).abs() < 1e-5, "{g:?} vs {kg}");
        let s: f64 = 1.3;
        assert!(ch.to_chart([s.cos(), s.sin()])[1].abs() < 1e-13);
    }

    #[test]
    fn outside_point_is_rejected() {
        assert!(chart_at(&SurfaceModel::flat_disk(), [1.2, 0.0]).is_err());
    }

    proptest! {
        #[test]
        fn chart_round_trip(a in 0.0f64..6.28, rho in 0.0f64..0.95, t in 0.0f64..6.28, s in 0.0f64..1.0, bnd in proptest::bool::ANY) {
            let models = [
                SurfaceModel::flat_disk(),
                SurfaceModel::conformal_disk(Expr::parse("0.2*x + 0.1*r^2").unwrap()).unwrap(),
            ];
            for m in &models {
                let xi = if bnd { [a.cos(), a.sin()] } else { [rho * a.cos(), rho * a.sin()] };
                let ch = chart_at(m, xi).unwrap();
                let y = if bnd {
                    [s * ch.radius * t.cos(), s * ch.radius * t.sin().abs()]
                } else {
                    [s * ch.radius * t.cos(), s * ch.radius * t.sin()]
                };
                let x = ch.from_chart(y);
                let back = ch.to_chart(x);
                prop_assert!((back[0] - y[0]).abs() < 1e-12 && (back[1] - y[1]).abs() < 1e-12);
                prop_assert!(x[0].hypot(x[1]) <= 1.0 + 1e-12);
            }
        }
    }
}
