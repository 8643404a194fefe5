//! P1 finite elements for `−Δ_g u = f − f̄`, `∂_ν u = g_N`, `∫u = 0`.
//!
//! The Laplace–Beltrami operator is conformally covariant in two dimensions,
//! so the stiffness matrix is the flat one; the metric enters only through
//! the quadrature weights of loads and masses.

use crate::surface::norms::hat_gradients;
use crate::surface::{Field, Mesh, QuadPoint, Quadrature, SurfaceModel};
use crate::tolerances::{TOL_LIN, TOL_MEAN};
use crate::{Error, Point, Result};
use faer::prelude::*;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::Side;
use rayon::prelude::*;

/// Assembled stiffness with its pinned factorization and the metric data.
pub struct DiscreteOperator {
    pub model: SurfaceModel,
    pub mesh: Mesh,
    pub quad: Quadrature,
    /// Merged upper and lower stiffness entries in deterministic order.
    pub stiffness: Vec<(usize, usize, f64)>,
    /// `∫ φ_i dv_g`.
    pub lumped: Vec<f64>,
    area: f64,
    pin: usize,
    factor: Llt<usize, f64>,
}

/// Sums duplicate `(row, col)` entries after a stable sort.
pub fn merge_triplets(mut t: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    t.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
    let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(t.len() / 2);
    for (i, j, v) in t {
        match out.last_mut() {
            Some(last) if last.0 == i && last.1 == j => last.2 += v,
            _ => out.push((i, j, v)),
        }
    }
    out
}

pub(crate) fn sparse(n: usize, t: &[(usize, usize, f64)]) -> Result<SparseColMat<usize, f64>> {
    let trip: Vec<Triplet<usize, usize, f64>> = t.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
    SparseColMat::try_new_from_triplets(n, n, &trip)
        .map_err(|e| Error::LinearAlgebra { message: format!("sparse assembly failed: {e:?}"), residual: f64::NAN })
}

/// Assembles the operator on `mesh` for `model`.
pub fn assemble(model: &SurfaceModel, mesh: Mesh) -> Result<DiscreteOperator> {
    if mesh.n_triangles() == 0 {
        return Err(Error::Mesh("empty mesh".into()));
    }
    let n = mesh.n_vertices();
    let mut raw = Vec::with_capacity(9 * mesh.n_triangles());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (g, area) = hat_gradients(&mesh, tri);
        if !(area > 0.0) || !area.is_finite() {
            return Err(Error::Mesh(format!("degenerate triangle {t}")));
        }
        let a = mesh.effective_area(t);
        for i in 0..3 {
            for j in 0..3 {
                raw.push((tri[i], tri[j], a * (g[i][0] * g[j][0] + g[i][1] * g[j][1])));
            }
        }
    }
    let stiffness = merge_triplets(raw);
    let quad = Quadrature::new(&mesh, model);
    let lumped = nodal_load(&mesh, &quad, |_| 1.0);
    let area = quad.area();
    let pin = pin_vertex(&mesh);
    let pinned: Vec<(usize, usize, f64)> = stiffness
        .iter()
        .copied()
        .filter(|&(i, j, _)| i != pin && j != pin)
        .chain(std::iter::once((pin, pin, 1.0)))
        .collect();
    let factor = sparse(n, &pinned)?
        .sp_cholesky(Side::Lower)
        .map_err(|e| Error::LinearAlgebra { message: format!("Cholesky failed: {e:?}"), residual: f64::NAN })?;
    Ok(DiscreteOperator { model: model.clone(), mesh, quad, stiffness, lumped, area, pin, factor })
}

/// Vertex closest to the origin among non-mark vertices.
fn pin_vertex(mesh: &Mesh) -> usize {
    (0..mesh.n_vertices())
        .filter(|v| !mesh.mark_vertices.contains(v))
        .min_by(|&a, &b| {
            let ra = mesh.vertices[a][0].hypot(mesh.vertices[a][1]);
            let rb = mesh.vertices[b][0].hypot(mesh.vertices[b][1]);
            ra.total_cmp(&rb)
        })
        .unwrap_or(0)
}

fn nodal_load<F: Fn(&QuadPoint) -> f64 + Sync>(mesh: &Mesh, quad: &Quadrature, f: F) -> Vec<f64> {
    let n = mesh.n_vertices();
    let chunk = (quad.points.len() / (4 * rayon::current_num_threads().max(1))).max(4096);
    let parts: Vec<Vec<(usize, f64)>> = quad
        .points
        .par_chunks(chunk)
        .map(|qs| {
            let mut acc = Vec::with_capacity(3 * qs.len());
            for q in qs {
                let v = f(q) * q.w;
                let t = mesh.triangles[q.tri as usize];
                for k in 0..3 {
                    acc.push((t[k], v * q.bary[k]));
                }
            }
            acc
        })
        .collect();
    let mut b = vec![0.0; n];
    for part in parts {
        for (i, v) in part {
            b[i] += v;
        }
    }
    b
}

impl DiscreteOperator {
    pub fn n(&self) -> usize {
        self.mesh.n_vertices()
    }

    /// `|Σ|_g` as seen by the quadrature.
    pub fn area(&self) -> f64 {
        self.area
    }

    /// Load vector `∫ f φ_i dv_g`.
    pub fn load<F: Fn(&QuadPoint) -> f64 + Sync>(&self, f: F) -> Vec<f64> {
        nodal_load(&self.mesh, &self.quad, f)
    }

    /// Boundary load vector `∫_{∂Σ} g φ_i ds_g`.
    pub fn boundary_load<F: Fn(Point) -> f64>(&self, g: F) -> Vec<f64> {
        let (gp, gw) = crate::surface::quadrature::gauss_legendre_on::<f64>(4, 0.0, 1.0);
        let mut b = vec![0.0; self.n()];
        for &(t, a, bv) in &self.mesh.segments {
            let (pa, pb) = (self.mesh.vertices[a], self.mesh.vertices[bv]);
            let phi_a = pa[1].atan2(pa[0]);
            let delta = crate::surface::mesh::segment_angle(pa, pb);
            let tri = self.mesh.triangles[t];
            for (&u, &w) in gp.iter().zip(&gw) {
                let phi = phi_a + u * delta;
                let x = [phi.cos(), phi.sin()];
                let ds = (0.5 * self.model.psi(x)).exp() * delta * w;
                let l = self.mesh.barycentric(t, x);
                let v = g(x) * ds;
                for k in 0..3 {
                    b[tri[k]] += v * l[k];
                }
            }
        }
        b
    }

    /// Nodal load of a unit point mass at `x`.
    pub fn point_load(&self, x: Point) -> Result<Vec<f64>> {
        let (t, l) = self
            .mesh
            .locate(x)
            .ok_or_else(|| Error::Domain(format!("point ({}, {}) is outside the mesh", x[0], x[1])))?;
        let mut b = vec![0.0; self.n()];
        for (k, &v) in self.mesh.triangles[t].iter().enumerate() {
            b[v] += l[k];
        }
        Ok(b)
    }

    /// `K u`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        for &(i, j, v) in &self.stiffness {
            out[i] += v * u[j];
        }
        out
    }

    /// `uᵀ K v = ∫ ∇u·∇v`.
    pub fn energy(&self, u: &[f64], v: &[f64]) -> f64 {
        self.stiffness.iter().map(|&(i, j, k)| u[i] * k * v[j]).sum()
    }

    /// `∫ u dv_g` for nodal values.
    pub fn integral(&self, u: &[f64]) -> f64 {
        u.iter().zip(&self.lumped).map(|(a, b)| a * b).sum()
    }

    /// Mean value `∫u/|Σ|`.
    pub fn mean(&self, u: &[f64]) -> f64 {
        self.integral(u) / self.area
    }

    /// Solves `K u = b − (Σb/|Σ|) m` with `∫u = 0`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        if b.len() != n {
            return Err(Error::Parameter(format!("load has length {} for {} vertices", b.len(), n)));
        }
        if let Some(k) = b.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite load at vertex {k}")));
        }
        let total: f64 = b.iter().sum();
        let shift = total / self.area;
        let rhs: Vec<f64> = b.iter().zip(&self.lumped).map(|(v, m)| v - shift * m).collect();
        let norm_b = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm_b == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let mut col = Col::<f64>::from_fn(n, |i| if i == self.pin { 0.0 } else { rhs[i] });
        self.factor.solve_in_place(col.as_mat_mut());
        let mut u: Vec<f64> = (0..n).map(|i| col[i]).collect();
        let mean = self.mean(&u);
        u.iter_mut().for_each(|v| *v -= mean);
        let r = self.apply(&u);
        let res = r.iter().zip(&rhs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() / norm_b;
        if !(res <= TOL_LIN) {
            return Err(Error::LinearAlgebra { message: "zero-mean Neumann solve did not converge".into(), residual: res });
        }
        if self.mean(&u).abs() > TOL_MEAN * self.area.max(1.0) {
            return Err(Error::Numeric("mean correction failed".into()));
        }
        Ok(u)
    }

    /// Solves with a load given as a closure on quadrature points.
    pub fn solve_fn<F: Fn(&QuadPoint) -> f64 + Sync>(&self, f: F) -> Result<Vec<f64>> {
        self.solve(&self.load(f))
    }

    /// Load vector from values at the quadrature points, in their order.
    pub fn load_values(&self, values: &[f64]) -> Vec<f64> {
        let mut b = vec![0.0; self.n()];
        for (q, v) in self.quad.points.iter().zip(values) {
            let t = self.mesh.triangles[q.tri as usize];
            let v = v * q.w;
            for k in 0..3 {
                b[t[k]] += v * q.bary[k];
            }
        }
        b
    }

    /// Nodal field evaluated at every quadrature point.
    pub fn at_points(&self, u: &[f64]) -> Vec<f64> {
        self.quad
            .points
            .iter()
            .map(|q| {
                let t = self.mesh.triangles[q.tri as usize];
                (0..3).map(|k| q.bary[k] * u[t[k]]).sum()
            })
            .collect()
    }

    /// Weighted consistent mass entries `∫ c φ_i φ_j dv_g`.
    pub fn weighted_mass<F: Fn(&QuadPoint) -> f64>(&self, c: F) -> Vec<(usize, usize, f64)> {
        let values: Vec<f64> = self.quad.points.iter().map(c).collect();
        self.weighted_mass_values(&values)
    }

    /// [`DiscreteOperator::weighted_mass`] with the weight given at the quadrature points.
    pub fn weighted_mass_values(&self, c: &[f64]) -> Vec<(usize, usize, f64)> {
        let mut raw = Vec::with_capacity(9 * self.quad.points.len() / 4);
        let mut per_tri: Vec<[f64; 9]> = vec![[0.0; 9]; self.mesh.n_triangles()];
        for (q, c) in self.quad.points.iter().zip(c) {
            let v = c * q.w;
            let m = &mut per_tri[q.tri as usize];
            for i in 0..3 {
                for j in 0..3 {
                    m[3 * i + j] += v * q.bary[i] * q.bary[j];
                }
            }
        }
        for (t, m) in per_tri.iter().enumerate() {
            let tri = self.mesh.triangles[t];
            for i in 0..3 {
                for j in 0..3 {
                    raw.push((tri[i], tri[j], m[3 * i + j]));
                }
            }
        }
        merge_triplets(raw)
    }

    /// Ratio of extreme nonzero stiffness eigenvalues, estimated by power and
    /// inverse iteration on the zero-mean subspace.
    pub fn condition_estimate(&self, iterations: usize) -> Result<f64> {
        let n = self.n();
        let mut x: Vec<f64> = (0..n).map(|i| ((i * 7919 % 104729) as f64 / 104729.0) - 0.5).collect();
        let project = |v: &mut Vec<f64>, op: &Self| {
            let m = op.mean(v);
            v.iter_mut().for_each(|a| *a -= m);
            let s = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.iter_mut().for_each(|a| *a /= s);
        };
        project(&mut x, self);
        let mut lmax = 0.0;
        for _ in 0..iterations {
            let mut y = self.apply(&x);
            lmax = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
            project(&mut y, self);
            x = y;
        }
        let mut z: Vec<f64> = (0..n).map(|i| ((i * 104723 % 7919) as f64 / 7919.0) - 0.5).collect();
        project(&mut z, self);
        let mut lmin = 0.0;
        for _ in 0..iterations {
            let mut w = self.solve(&z)?;
            // Rayleigh quotient of K on the mean-free iterate.
            let kz = self.apply(&z);
            lmin = z.iter().zip(&kz).map(|(a, b)| a * b).sum::<f64>();
            project(&mut w, self);
            z = w;
        }
        Ok(lmax / lmin)
    }
}

/// Solves `−Δ_g u = f − f̄` with `∂_ν u = g_N` and zero mean for nodal data.
pub fn solve_zero_mean(op: &DiscreteOperator, f: &Field, g_n: &Field) -> Result<Field> {
    f.check_finite()?;
    g_n.check_finite()?;
    let mut b = op.load(|q| f.at(&op.mesh, q));
    let gb = op.boundary_load(|x| g_n.eval(&op.mesh, x).unwrap_or(0.0));
    for (a, g) in b.iter_mut().zip(gb) {
        *a += g;
    }
    Ok(Field::new(op.solve(&b)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{h1_product, integrate, mesh_model};

    fn disk(h: f64) -> DiscreteOperator {
        let m = SurfaceModel::flat_disk();
        assemble(&m, mesh_model(&m, h, &[]).unwrap()).unwrap()
    }

    #[test]
    fn constants_in_kernel() {
        let op = disk(0.1);
        let k1 = op.apply(&vec![1.0; op.n()]);
        assert!(k1.iter().all(|v| v.abs() < 1e-12));
        assert!((op.area() - std::f64::consts::PI).abs() < 1e-12);
        let s: f64 = op.lumped.iter().sum();
        assert!((s - op.area()).abs() < 1e-12);
    }

    #[test]
    fn zero_data_gives_zero() {
        let op = disk(0.1);
        let z = Field::zeros(op.n());
        assert!(solve_zero_mean(&op, &z, &z).unwrap().values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn manufactured_solution() {
        let mut errs = Vec::new();
        for h in [0.1, 0.05, 0.025] {
            let op = disk(h);
            let u = op.solve_fn(|q| 8.0 - 16.0 * (q.x[0] * q.x[0] + q.x[1] * q.x[1])).unwrap();
            let exact = Field::from_fn(&op.mesh, |x| {
                let r2 = x[0] * x[0] + x[1] * x[1];
                (1.0 - r2).powi(2) - 1.0 / 3.0
            });
            let e = Field::new(u.iter().zip(&exact.values).map(|(a, b)| a - b).collect());
            errs.push((h, h1_product(&op.mesh, &e, &e).unwrap().sqrt()));
            assert!(op.mean(&u).abs() < 1e-10);
            let max = e.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(max < 20.0 * h * h, "h={h} max={max}");
        }
        let fit = crate::fit::fit_slope(&errs, crate::fit::FitSpace::LogLog).unwrap();
        assert!(fit.slope >= 0.9, "{fit:?}");
    }

    #[test]
    fn self_adjoint_pairing() {
        let op = disk(0.08);
        let f1 = |q: &QuadPoint| q.x[0] + 0.3 * q.x[1] * q.x[1];
        let f2 = |q: &QuadPoint| (2.0 * q.x[1]).sin() + q.x[0] * q.x[1];
        let u1 = op.solve_fn(f1).unwrap();
        let u2 = op.solve_fn(f2).unwrap();
        let a = op.load(f1).iter().zip(&u2).map(|(b, u)| b * u).sum::<f64>();
        let b = op.load(f2).iter().zip(&u1).map(|(b, u)| b * u).sum::<f64>();
        assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn integrals_on_the_disk() {
        let op = disk(0.05);
        let one = Field::from_fn(&op.mesh, |_| 1.0);
        assert!((integrate(&op.mesh, &op.quad, &one).unwrap() - std::f64::consts::PI).abs() < 1e-10);
        let v = op.quad.integrate(|q| 8.0 - 16.0 * (q.x[0] * q.x[0] + q.x[1] * q.x[1])).unwrap();
        assert!(v.abs() < 1e-8, "{v}");
        let x1 = Field::from_fn(&op.mesh, |x| x[0]);
        assert!((h1_product(&op.mesh, &x1, &x1).unwrap() - std::f64::consts::PI).abs() < 1e-6);
    }

    #[test]
    fn boundary_flux_balances_source() {
        // u = r²/2 − 1/4: −Δu = −2, ∂_ν u = 1 on the circle.
        let op = disk(0.05);
        let mut b = op.load(|_| -2.0);
        for (a, g) in b.iter_mut().zip(op.boundary_load(|_| 1.0)) {
            *a += g;
        }
        let total: f64 = b.iter().sum();
        assert!(total.abs() < 1e-10, "{total}");
        let u = op.solve(&b).unwrap();
        let err = u
            .iter()
            .zip(&op.mesh.vertices)
            .map(|(v, x)| (v - (0.5 * (x[0] * x[0] + x[1] * x[1]) - 0.25)).abs())
            .fold(0.0, f64::max);
        assert!(err < 5e-3, "{err}");
    }

    #[test]
    fn condition_number_grows_like_inverse_h_squared() {
        let c1 = disk(0.2).condition_estimate(60).unwrap();
        let c2 = disk(0.1).condition_estimate(60).unwrap();
        let c3 = disk(0.05).condition_estimate(60).unwrap();
        let r1 = c2 / c1;
        let r2 = c3 / c2;
        assert!(r1 > 2.5 && r1 < 6.0 && r2 > 2.5 && r2 < 6.0, "{c1} {c2} {c3}");
    }

    #[test]
    fn point_load_profile() {
        // Interior point load: u ≈ −(1/2π) ln r + smooth.
        let op = disk(0.03);
        let u = op.solve(&op.point_load([0.0, 0.0]).unwrap()).unwrap();
        let at = |r: f64| op.mesh.interpolate(&u, [r, 0.0]).unwrap();
        let slope = (at(0.4) - at(0.2)) / (0.4f64.ln() - 0.2f64.ln());
        // −1/2π from the source plus r²/(4π) correction between the radii.
        let expect = -1.0 / (2.0 * std::f64::consts::PI) + (0.16 - 0.04) / (4.0 * std::f64::consts::PI) / 2f64.ln();
        assert!((slope - expect).abs() < 5e-3, "{slope} vs {expect}");
    }
}
