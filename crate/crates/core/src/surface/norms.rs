//! Quadrature on meshes, nodal fields, integrals and norms.

use super::mesh::Mesh;
use super::model::SurfaceModel;
use super::mesh::segment_angle;
use super::quadrature::{gauss_legendre_on, triangle_rule};
use crate::{Error, Point, Result};

/// Points per direction of the collapsed rule on regular triangles.
const ORDER_REGULAR: usize = 4;
/// Points per direction on triangles touching a mark.
const ORDER_MARKED: usize = 8;
/// Points per direction on boundary segments.
const SEGMENT_ORDER: usize = 4;

/// A quadrature node with its weight in `dv_g`.
#[derive(Clone, Copy, Debug)]
pub struct QuadPoint {
    pub x: Point,
    pub w: f64,
    pub tri: u32,
    pub bary: [f64; 3],
}

/// Quadrature rule covering the mesh in the model metric.
#[derive(Clone, Debug)]
pub struct Quadrature {
    pub points: Vec<QuadPoint>,
}

impl Quadrature {
    /// Builds the rule on the curved disk.
    ///
    /// Triangles incident to a mark use a rule graded towards the mark vertex
    /// for the mark's weight exponent.
    pub fn new(mesh: &Mesh, model: &SurfaceModel) -> Self {
        let regular = triangle_rule::<f64>(ORDER_REGULAR, 0.0);
        let mut graded: Vec<(usize, Vec<([f64; 3], f64)>)> = Vec::new();
        for (m, &v) in mesh.marks.iter().zip(&mesh.mark_vertices) {
            if !graded.iter().any(|(w, _)| *w == v) {
                graded.push((v, triangle_rule::<f64>(ORDER_MARKED, m.weight_exponent)));
            }
        }
        let mut points = Vec::with_capacity(mesh.n_triangles() * regular.len());
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let area = mesh.triangle_area(t);
            let apex = tri.iter().enumerate().find_map(|(k, v)| graded.iter().find(|(w, _)| w == v).map(|(_, r)| (k, r)));
            let (rule, k0) = match apex {
                Some((k, r)) => (r, k),
                None => (&regular, 0),
            };
            for (l, w) in rule {
                // Rotate barycentrics so the rule's apex sits at local vertex k0.
                let mut bary = [0.0; 3];
                for j in 0..3 {
                    bary[(k0 + j) % 3] = l[j];
                }
                let x = (0..3).fold([0.0, 0.0], |acc, j| {
                    let p = mesh.vertices[tri[j]];
                    [acc[0] + bary[j] * p[0], acc[1] + bary[j] * p[1]]
                });
                points.push(QuadPoint { x, w: w * area * model.density(x), tri: t as u32, bary });
            }
        }
        // Circular segments carry the boundary triangle's linear extension.
        let (gp, gw) = gauss_legendre_on::<f64>(SEGMENT_ORDER, 0.0, 1.0);
        for &(t, a, b) in &mesh.segments {
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            let delta = segment_angle(pa, pb);
            let phi_a = pa[1].atan2(pa[0]);
            let d = (0.5 * delta).cos();
            for (&u, &wu) in gp.iter().zip(&gw) {
                let phi = phi_a + delta * u;
                let rc = d / (phi - phi_a - 0.5 * delta).cos();
                for (&v, &wv) in gp.iter().zip(&gw) {
                    let rho = rc + v * (1.0 - rc);
                    let x = [rho * phi.cos(), rho * phi.sin()];
                    let w = delta * wu * wv * rho * (1.0 - rc);
                    let bary = mesh.barycentric(t, x);
                    points.push(QuadPoint { x, w: w * model.density(x), tri: t as u32, bary });
                }
            }
        }
        Quadrature { points }
    }

    /// Total measure of the mesh.
    pub fn area(&self) -> f64 {
        self.points.iter().map(|q| q.w).sum()
    }

    /// `∫ f dv_g` for a closure of the ambient point.
    pub fn integrate<F: Fn(&QuadPoint) -> f64>(&self, f: F) -> Result<f64> {
        let mut s = 0.0;
        for q in &self.points {
            let v = f(q);
            if !v.is_finite() {
                return Err(Error::Numeric(format!("non-finite integrand at ({}, {})", q.x[0], q.x[1])));
            }
            s += v * q.w;
        }
        Ok(s)
    }

    /// `(∫ |f|^s dv_g)^{1/s}`.
    pub fn lp_norm<F: Fn(&QuadPoint) -> f64>(&self, f: F, s: f64) -> Result<f64> {
        if !(s > 1.0) {
            return Err(Error::Parameter(format!("norm exponent must exceed 1, got {s}")));
        }
        Ok(self.integrate(|q| f(q).abs().powf(s))?.powf(1.0 / s))
    }
}

/// P1 field given by nodal values.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(values: Vec<f64>) -> Self {
        Field { values }
    }

    pub fn zeros(n: usize) -> Self {
        Field { values: vec![0.0; n] }
    }

    /// Samples a closure at the mesh vertices.
    pub fn from_fn<F: Fn(Point) -> f64>(mesh: &Mesh, f: F) -> Self {
        Field { values: mesh.vertices.iter().map(|&p| f(p)).collect() }
    }

    /// Value at a quadrature point.
    pub fn at(&self, mesh: &Mesh, q: &QuadPoint) -> f64 {
        let t = mesh.triangles[q.tri as usize];
        q.bary[0] * self.values[t[0]] + q.bary[1] * self.values[t[1]] + q.bary[2] * self.values[t[2]]
    }

    /// Value at an arbitrary point of the disk.
    pub fn eval(&self, mesh: &Mesh, x: Point) -> Option<f64> {
        mesh.interpolate(&self.values, x)
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(k) => Err(Error::Numeric(format!("non-finite value at vertex {k}"))),
            None => Ok(()),
        }
    }
}

/// `∫ f dv_g` for a nodal field.
pub fn integrate(mesh: &Mesh, quad: &Quadrature, f: &Field) -> Result<f64> {
    f.check_finite()?;
    quad.integrate(|q| f.at(mesh, q))
}

/// `‖f‖_s` for a nodal field.
pub fn lp_norm(mesh: &Mesh, quad: &Quadrature, f: &Field, s: f64) -> Result<f64> {
    f.check_finite()?;
    quad.lp_norm(|q| f.at(mesh, q), s)
}

/// Dirichlet pairing `∫ ∇u·∇v`, independent of the conformal factor.
///
/// Boundary triangles extend linearly into their circular segments.
pub fn h1_product(mesh: &Mesh, u: &Field, v: &Field) -> Result<f64> {
    u.check_finite()?;
    v.check_finite()?;
    let mut s = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let gu = element_gradient(mesh, tri, &u.values);
        let gv = element_gradient(mesh, tri, &v.values);
        s += mesh.effective_area(t) * (gu[0] * gv[0] + gu[1] * gv[1]);
    }
    Ok(s)
}

/// Gradients of the three hat functions on a triangle, with its area.
pub fn hat_gradients(mesh: &Mesh, tri: &[usize; 3]) -> ([[f64; 2]; 3], f64) {
    let [a, b, c] = tri.map(|i| mesh.vertices[i]);
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let g = [
        [(b[1] - c[1]) / det, (c[0] - b[0]) / det],
        [(c[1] - a[1]) / det, (a[0] - c[0]) / det],
        [(a[1] - b[1]) / det, (b[0] - a[0]) / det],
    ];
    (g, 0.5 * det)
}

fn element_gradient(mesh: &Mesh, tri: &[usize; 3], vals: &[f64]) -> [f64; 2] {
    let (g, _) = hat_gradients(mesh, tri);
    let mut out = [0.0; 2];
    for k in 0..3 {
        out[0] += g[k][0] * vals[tri[k]];
        out[1] += g[k][1] * vals[tri[k]];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::surface::mesh::{mesh_model, Mark};
    use std::f64::consts::PI;

    #[test]
    fn gradients_sum_to_zero() {
        let model = SurfaceModel::flat_disk();
        let mesh = mesh_model(&model, 0.3, &[]).unwrap();
        let (g, a) = hat_gradients(&mesh, &mesh.triangles[0]);
        assert!(a > 0.0);
        assert!((g[0][0] + g[1][0] + g[2][0]).abs() < 1e-12);
        assert!((g[0][1] + g[1][1] + g[2][1]).abs() < 1e-12);
    }

    #[test]
    fn lp_norm_rejects_small_exponent() {
        let model = SurfaceModel::flat_disk();
        let mesh = mesh_model(&model, 0.3, &[]).unwrap();
        let q = Quadrature::new(&mesh, &model);
        assert!(q.lp_norm(|_| 1.0, 1.0).is_err());
        let f = Field::zeros(mesh.n_vertices());
        assert_eq!(lp_norm(&mesh, &q, &f, 2.0).unwrap(), 0.0);
        let mut bad = f.clone();
        bad.values[0] = f64::NAN;
        assert!(integrate(&mesh, &q, &bad).is_err());
    }

    #[test]
    fn singular_weight_graded_rule() {
        // ∫ |x|^{-1.2} over the disk = 2π / 0.8.
        let model = SurfaceModel::flat_disk();
        let mesh = mesh_model(&model, 0.05, &[Mark::new([0.0, 0.0], 2.5).with_weight(-1.2)]).unwrap();
        let q = Quadrature::new(&mesh, &model);
        let i = q.integrate(|p| p.x[0].hypot(p.x[1]).powf(-1.2)).unwrap();
        assert!((i - 2.0 * PI / 0.8).abs() / (2.0 * PI / 0.8) < 2e-3, "{i}");
    }

    #[test]
    fn conformal_measure() {
        let model = SurfaceModel::conformal_disk(Expr::parse("r^2").unwrap()).unwrap();
        let mesh = mesh_model(&model, 0.05, &[]).unwrap();
        let q = Quadrature::new(&mesh, &model);
        assert!((q.area() - model.area()).abs() < 2e-3 * model.area());
    }
}
