//! Model surfaces: the flat unit disk and conformal disks `e^ψ |dx|²`.

use super::quadrature::gauss_legendre_on;
use crate::expr::{Dual, Expr};
use crate::{Error, Point, Result};
use std::f64::consts::PI;

/// Distance to the unit circle below which a point counts as a boundary point.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Geometry kind.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    FlatDisk,
    /// Unit disk with metric `e^ψ |dx|²`.
    ConformalDisk(Expr),
}

/// A compact surface with boundary realized on the closed unit disk.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceModel {
    pub kind: ModelKind,
    area: f64,
    boundary_length: f64,
}

/// Location tag of a surface point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Interior,
    Boundary,
}

impl Location {
    /// `8π` for interior points and `4π` on the boundary.
    pub fn varrho(self) -> f64 {
        match self {
            Location::Interior => 8.0 * PI,
            Location::Boundary => 4.0 * PI,
        }
    }
}

impl SurfaceModel {
    pub fn flat_disk() -> Self {
        SurfaceModel { kind: ModelKind::FlatDisk, area: PI, boundary_length: 2.0 * PI }
    }

    /// Conformal disk with factor `ψ`; the area is computed by polar quadrature.
    pub fn conformal_disk(psi: Expr) -> Result<Self> {
        let mut m = SurfaceModel { kind: ModelKind::ConformalDisk(psi), area: 0.0, boundary_length: 0.0 };
        let (rs, wr) = gauss_legendre_on(48, 0.0, 1.0);
        let nt = 128;
        let mut area = 0.0;
        let mut length = 0.0;
        for k in 0..nt {
            let t = 2.0 * PI * k as f64 / nt as f64;
            let (c, s) = (t.cos(), t.sin());
            for (&r, &w) in rs.iter().zip(&wr) {
                area += w * r * m.psi([r * c, r * s]).exp();
            }
            length += (0.5 * m.psi([c, s])).exp();
        }
        area *= 2.0 * PI / nt as f64;
        length *= 2.0 * PI / nt as f64;
        if !(area.is_finite() && area > 0.0 && length.is_finite()) {
            return Err(Error::Domain(format!("conformal factor gives area {area}")));
        }
        m.area = area;
        m.boundary_length = length;
        Ok(m)
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.kind, ModelKind::FlatDisk)
    }

    /// Total area `|Σ|_g`.
    pub fn area(&self) -> f64 {
        self.area
    }

    /// Length of `∂Σ` in the metric.
    pub fn boundary_length(&self) -> f64 {
        self.boundary_length
    }

    /// Conformal factor ψ at `x`.
    pub fn psi(&self, x: Point) -> f64 {
        match &self.kind {
            ModelKind::FlatDisk => 0.0,
            ModelKind::ConformalDisk(e) => e.eval(x),
        }
    }

    /// Conformal factor with its ambient gradient.
    pub fn psi_grad(&self, x: Point) -> Dual {
        match &self.kind {
            ModelKind::FlatDisk => Dual { v: 0.0, d: [0.0; 2] },
            ModelKind::ConformalDisk(e) => e.eval_grad(x),
        }
    }

    /// Area density `e^ψ` relative to `dx`.
    pub fn density(&self, x: Point) -> f64 {
        self.psi(x).exp()
    }

    /// Geodesic curvature of the boundary at angle `theta`.
    pub fn boundary_curvature(&self, theta: f64) -> f64 {
        let x = [theta.cos(), theta.sin()];
        let p = self.psi_grad(x);
        let dr = p.d[0] * x[0] + p.d[1] * x[1];
        (-0.5 * p.v).exp() * (1.0 + 0.5 * dr)
    }

    /// Classifies `x`, failing outside the closed disk.
    pub fn locate(&self, x: Point) -> Result<Location> {
        if !(x[0].is_finite() && x[1].is_finite()) {
            return Err(Error::Domain("non-finite point".into()));
        }
        let r = x[0].hypot(x[1]);
        if r > 1.0 + BOUNDARY_TOL {
            Err(Error::Domain(format!("point ({}, {}) lies outside the unit disk", x[0], x[1])))
        } else if r >= 1.0 - BOUNDARY_TOL {
            Ok(Location::Boundary)
        } else {
            Ok(Location::Interior)
        }
    }

    /// Stable 64-bit fingerprint used for cache keys.
    pub fn fingerprint(&self) -> u64 {
        let text = match &self.kind {
            ModelKind::FlatDisk => "flat-unit-disk".to_string(),
            ModelKind::ConformalDisk(e) => format!("conformal-disk:{e}"),
        };
        fnv1a(text.as_bytes())
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_disk_geometry() {
        let m = SurfaceModel::flat_disk();
        assert_eq!(m.area(), PI);
        for t in [0.0, 1.0, 4.0] {
            assert_eq!(m.boundary_curvature(t), 1.0);
        }
        assert_eq!(m.locate([0.3, 0.1]).unwrap(), Location::Interior);
        assert_eq!(m.locate([0.6, 0.8]).unwrap(), Location::Boundary);
        assert!(m.locate([1.0, 0.1]).is_err());
    }

    #[test]
    fn conformal_area_matches_radial_formula() {
        // ψ = r²: area = π (e − 1), k_g = e^{-1/2} (1 + 1).
        let m = SurfaceModel::conformal_disk(Expr::parse("r^2").unwrap()).unwrap();
        assert!((m.area() - PI * (1f64.exp() - 1.0)).abs() < 1e-12);
        assert!((m.boundary_curvature(0.3) - 2.0 * (-0.5f64).exp()).abs() < 1e-12);
        assert!((m.boundary_length() - 2.0 * PI * 0.5f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn constant_factor_scales_area() {
        let m = SurfaceModel::conformal_disk(Expr::parse("ln(4)").unwrap()).unwrap();
        assert!((m.area() - 4.0 * PI).abs() < 1e-12);
        // Disk of radius 2 has k_g = 1/2.
        assert!((m.boundary_curvature(2.0) - 0.5).abs() < 1e-12);
        assert_ne!(m.fingerprint(), SurfaceModel::flat_disk().fingerprint());
    }
}
