//! Singular data: the set `Q` with weights `γ` and coefficients `ϱ`, the
//! fields `h_Q` and `K = V e^{−h_Q}`, local factors `K_i`, resonant values,
//! and the geodesic-curvature transform.

use crate::elliptic::DiscreteOperator;
use crate::expr::Expr;
use crate::fit::{fit_slope, FitSpace};
use crate::green::GreenProvider;
use crate::surface::{chart_at, Location, SurfaceModel};
use crate::tolerances::{RESONANCE_COLLISION, RESONANCE_DEDUP, RESONANCE_IDENTITY};
use crate::{Error, Point, Result};
use std::f64::consts::PI;

/// Largest `|Q|` accepted by the subset enumeration.
pub const MAX_SINGULAR_POINTS: usize = 20;

/// Whether `γ` is a non-negative integer up to `1e−12`.
pub fn is_quantized(gamma: f64) -> bool {
    gamma > -1e-12 && (gamma - gamma.round()).abs() < 1e-12
}

/// One point of `Q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularPoint {
    pub point: Point,
    pub gamma: f64,
    pub location: Location,
}

impl SingularPoint {
    /// `ϱ(ξ)`.
    pub fn varrho(&self) -> f64 {
        self.location.varrho()
    }

    /// `(1 + γ) ϱ`, the mass carried by a bubble at this point.
    pub fn mass(&self) -> f64 {
        (1.0 + self.gamma) * self.varrho()
    }
}

/// Validated singular data `(Q, γ, ϱ, V)`.
#[derive(Clone, Debug)]
pub struct SingularSet {
    pub model: SurfaceModel,
    pub points: Vec<SingularPoint>,
    pub v: Expr,
}

impl SingularSet {
    /// Validates weights, locations and positivity of `V` on a polar sample grid.
    ///
    /// Boundary points are snapped onto the circle.
    pub fn new(model: &SurfaceModel, points: &[(Point, f64)], v: Expr) -> Result<Self> {
        let mut out: Vec<SingularPoint> = Vec::with_capacity(points.len());
        for (k, &(x, gamma)) in points.iter().enumerate() {
            if !(gamma > -1.0) || !gamma.is_finite() {
                return Err(Error::Validation(format!("singular point {k}: γ = {gamma} must exceed −1")));
            }
            if is_quantized(gamma) {
                return Err(Error::Validation(format!("singular point {k}: γ = {gamma} is a non-negative integer")));
            }
            let location = model.locate(x)?;
            let point = match location {
                Location::Interior => x,
                Location::Boundary => {
                    let r = x[0].hypot(x[1]);
                    [x[0] / r, x[1] / r]
                }
            };
            if out.iter().any(|p| (p.point[0] - point[0]).hypot(p.point[1] - point[1]) < 1e-9) {
                return Err(Error::Validation(format!("singular point {k} repeats an earlier point")));
            }
            out.push(SingularPoint { point, gamma, location });
        }
        for i in 0..=16 {
            let r = i as f64 / 16.0;
            for j in 0..32 {
                let t = 2.0 * PI * j as f64 / 32.0;
                let val = v.eval([r * t.cos(), r * t.sin()]);
                if !(val > 0.0) || !val.is_finite() {
                    return Err(Error::Validation(format!("V = {val} is not positive at r = {r}, θ = {t:.3}")));
                }
            }
        }
        Ok(SingularSet { model: model.clone(), points: out, v })
    }

    /// `Q = ∅` with the given `V`.
    pub fn empty(model: &SurfaceModel, v: Expr) -> Result<Self> {
        Self::new(model, &[], v)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the point of `Q` at `x`, if any.
    pub fn find(&self, x: Point) -> Option<usize> {
        self.points.iter().position(|p| (p.point[0] - x[0]).hypot(p.point[1] - x[1]) < 1e-9)
    }
}

/// `h_Q = Σ_{ξ∈Q} (ϱ(ξ)/2) γ(ξ) G(·, ξ)` through a Green provider.
pub struct HQ<'a> {
    set: &'a SingularSet,
    green: &'a dyn GreenProvider,
}

/// Builds `h_Q`, checking that the provider resolves every point of `Q`.
pub fn build_hq<'a>(set: &'a SingularSet, green: &'a dyn GreenProvider) -> Result<HQ<'a>> {
    for (k, p) in set.points.iter().enumerate() {
        green
            .robin(p.point)
            .map_err(|e| Error::Dependency(format!("no Green field for singular point {k}: {e}")))?;
    }
    Ok(HQ { set, green })
}

impl<'a> HQ<'a> {
    pub fn set(&self) -> &'a SingularSet {
        self.set
    }

    pub fn green(&self) -> &'a dyn GreenProvider {
        self.green
    }

    /// `h_Q(x)`; `±∞` at points of `Q` according to the sign of `γ`.
    pub fn value(&self, x: Point) -> Result<f64> {
        let mut s = 0.0;
        for p in &self.set.points {
            let c = 0.5 * p.varrho() * p.gamma;
            if (p.point[0] - x[0]).hypot(p.point[1] - x[1]) == 0.0 {
                return Ok(f64::INFINITY * c.signum());
            }
            s += c * self.green.g(x, p.point)?;
        }
        Ok(s)
    }

    /// `h_Q` with the singular logarithm of point `i` removed:
    /// `(ϱ_iγ_i/2) H(x, ξ_i) + Σ_{j≠i} (ϱ_jγ_j/2) G(x, ξ_j)`.
    pub fn regularized(&self, i: usize, x: Point) -> Result<f64> {
        let mut s = 0.0;
        for (j, p) in self.set.points.iter().enumerate() {
            let c = 0.5 * p.varrho() * p.gamma;
            s += if j == i { c * self.green.h(x, p.point)? } else { c * self.green.g(x, p.point)? };
        }
        Ok(s)
    }
}

/// `K = V e^{−h_Q}`.
pub struct KField<'a> {
    pub hq: HQ<'a>,
}

/// Builds `K` from `h_Q`.
pub fn build_k(hq: HQ<'_>) -> KField<'_> {
    KField { hq }
}

impl<'a> KField<'a> {
    /// `K(x)`; zero at points of `Q` with `γ > 0`.
    pub fn value(&self, x: Point) -> Result<f64> {
        let h = self.hq.value(x)?;
        Ok(self.hq.set.v.eval(x) * (-h).exp())
    }

    /// Local smooth factor at `xi` with weight `gamma`.
    ///
    /// `xi` must be a point of `Q` carrying `gamma`, or a regular point with `gamma = 0`.
    pub fn local(&self, xi: Point, gamma: f64) -> Result<LocalK<'_, 'a>> {
        match self.hq.set.find(xi) {
            Some(i) => {
                let p = self.hq.set.points[i];
                if (p.gamma - gamma).abs() > 1e-12 {
                    return Err(Error::Validation(format!("point of Q carries γ = {}, not {gamma}", p.gamma)));
                }
                Ok(LocalK { k: self, center: p.point, gamma, index: Some(i) })
            }
            None if gamma == 0.0 => Ok(LocalK { k: self, center: xi, gamma, index: None }),
            None => Err(Error::Validation(format!("γ = {gamma} requested at a point outside Q"))),
        }
    }
}

/// `K_i` with `K = K_i |y_{ξ_i}|^{2γ_i}` near `ξ_i`.
pub struct LocalK<'k, 'a> {
    k: &'k KField<'a>,
    pub center: Point,
    pub gamma: f64,
    index: Option<usize>,
}

/// Removable-limit cross-check of `K/|y|^{2γ}` along rays into the centre.
#[derive(Clone, Debug, PartialEq)]
pub struct RayReport {
    /// Extrapolated limit along each ray.
    pub limits: Vec<f64>,
    /// `(max − min)/mean` of the limits.
    pub spread: f64,
}

impl LocalK<'_, '_> {
    /// `K_i(x)`, smooth across the centre.
    pub fn value(&self, x: Point) -> Result<f64> {
        match self.index {
            None => self.k.value(x),
            Some(i) => Ok(self.k.hq.set.v.eval(x) * (-self.k.hq.regularized(i, x)?).exp()),
        }
    }

    /// `ln K_i(x)`.
    pub fn ln_value(&self, x: Point) -> Result<f64> {
        match self.index {
            None => Ok(self.k.hq.set.v.eval(x).ln() - self.k.hq.value(x)?),
            Some(i) => Ok(self.k.hq.set.v.eval(x).ln() - self.k.hq.regularized(i, x)?),
        }
    }

    /// `K_i` at its centre, falling back to the ray extrapolation when the
    /// direct evaluation fails.
    pub fn at_center(&self) -> Result<f64> {
        match self.value(self.center) {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
            _ => {
                let r = self.rays(5)?;
                let mean = r.limits.iter().sum::<f64>() / r.limits.len() as f64;
                if mean.is_finite() && mean > 0.0 {
                    Ok(mean)
                } else {
                    Err(Error::Numeric("K_i has no removable limit at its centre".into()))
                }
            }
        }
    }

    /// Extrapolates `K(x)/|y(x)|^{2γ}` to `y = 0` along `n` rays.
    ///
    /// Samples at `|y| ∈ r_ξ·{1/8, 1/16, 1/32, 1/64}` and fits a line in `|y|`.
    pub fn rays(&self, n: usize) -> Result<RayReport> {
        let chart = chart_at(&self.k.hq.set.model, self.center)?;
        let extent = chart.angular_extent();
        let mut limits = Vec::with_capacity(n);
        for k in 0..n {
            let theta = extent * (k as f64 + 0.5) / n as f64;
            let mut pts = Vec::new();
            for m in 3..7 {
                let rho = chart.radius / f64::powi(2.0, m);
                let y = [rho * theta.cos(), rho * theta.sin()];
                let x = chart.from_chart(y);
                let val = self.k.value(x)? / rho.powf(2.0 * self.gamma);
                pts.push((rho, val));
            }
            pts.reverse();
            limits.push(fit_slope(&pts, FitSpace::Linear)?.intercept);
        }
        let lo = limits.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = limits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = limits.iter().sum::<f64>() / n as f64;
        Ok(RayReport { limits, spread: (hi - lo) / mean })
    }
}

/// A triple `(p, q, Q₁)` with `Q₁` given as indices into `Q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexTriple {
    pub p: usize,
    pub q: usize,
    pub q1: Vec<usize>,
}

impl IndexTriple {
    /// `4π(2p + q) + Σ_{ξ∈Q₁} (1 + γ(ξ)) ϱ(ξ)`.
    pub fn value(&self, set: &SingularSet) -> f64 {
        4.0 * PI * (2 * self.p + self.q) as f64 + self.q1.iter().map(|&i| set.points[i].mass()).sum::<f64>()
    }

    /// `γ_j`: zero for the `p + q` regular centres, then `γ` of each point of `Q₁`.
    pub fn gammas(&self, set: &SingularSet) -> Vec<f64> {
        let mut g = vec![0.0; self.p + self.q];
        g.extend(self.q1.iter().map(|&i| set.points[i].gamma));
        g
    }

    /// `γ* = max γ_j`.
    pub fn gamma_star(&self, set: &SingularSet) -> f64 {
        self.gammas(set).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `γ₋ = min{0, min γ_j}`.
    pub fn gamma_minus(&self, set: &SingularSet) -> f64 {
        self.gammas(set).into_iter().fold(0.0, f64::min)
    }
}

/// Distinct triples whose values differ by less than the collision threshold
/// without being equal up to the deduplication tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct Collision {
    pub a: IndexTriple,
    pub b: IndexTriple,
    pub gap: f64,
}

/// Sorted resonant values with collision reports.
#[derive(Clone, Debug, PartialEq)]
pub struct Resonances {
    pub values: Vec<f64>,
    pub collisions: Vec<Collision>,
}

fn triples_up_to(set: &SingularSet, cap: f64) -> Result<Vec<(f64, IndexTriple)>> {
    if set.len() > MAX_SINGULAR_POINTS {
        return Err(Error::Resource(format!("{} singular points exceed the enumeration limit", set.len())));
    }
    let slack = cap * RESONANCE_IDENTITY + RESONANCE_DEDUP;
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << set.len()) {
        let q1: Vec<usize> = (0..set.len()).filter(|i| mask & (1 << i) != 0).collect();
        let base: f64 = q1.iter().map(|&i| set.points[i].mass()).sum();
        let mut p = 0;
        while base + 8.0 * PI * p as f64 <= cap + slack {
            let mut q = 0;
            loop {
                let t = IndexTriple { p, q, q1: q1.clone() };
                let v = t.value(set);
                if v > cap + slack {
                    break;
                }
                if p + q + q1.len() > 0 {
                    out.push((v, t));
                }
                q += 1;
            }
            p += 1;
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    Ok(out)
}

/// Resonant values up to `cap`, sorted and deduplicated at `1e−9`.
pub fn resonant_set(set: &SingularSet, cap: f64) -> Result<Resonances> {
    if !(cap > 0.0) {
        return Err(Error::Parameter(format!("resonance cap must be positive, got {cap}")));
    }
    let all = triples_up_to(set, cap)?;
    let mut values: Vec<f64> = Vec::new();
    let mut collisions = Vec::new();
    let mut last: Option<&(f64, IndexTriple)> = None;
    for item in &all {
        if let Some(prev) = last {
            let gap = item.0 - prev.0;
            if gap <= RESONANCE_DEDUP {
                continue;
            }
            if gap < RESONANCE_COLLISION {
                collisions.push(Collision { a: prev.1.clone(), b: item.1.clone(), gap });
            }
        }
        values.push(item.0);
        last = Some(item);
    }
    Ok(Resonances { values, collisions })
}

/// `ℐ_m` for the resonant value `ρ* = 4π n_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceIndex {
    /// Position of `ρ*` in the sorted resonant set, starting at 1.
    pub m: usize,
    pub n_m: f64,
    pub rho_star: f64,
    pub triples: Vec<IndexTriple>,
}

/// All triples realizing `ρ*`; fails when `ρ*` is not resonant.
pub fn enumerate_index_sets(set: &SingularSet, rho_star: f64) -> Result<ResonanceIndex> {
    if !(rho_star > 0.0) {
        return Err(Error::Parameter(format!("ρ* must be positive, got {rho_star}")));
    }
    let tol = RESONANCE_IDENTITY * rho_star;
    let triples: Vec<IndexTriple> = triples_up_to(set, rho_star)?
        .into_iter()
        .filter(|(v, _)| (v - rho_star).abs() <= tol)
        .map(|(_, t)| t)
        .collect();
    if triples.is_empty() {
        return Err(Error::Parameter(format!("ρ* = {rho_star} is not a resonant value")));
    }
    let values = resonant_set(set, rho_star)?.values;
    let m = values.iter().filter(|&&v| v <= rho_star + RESONANCE_DEDUP).count();
    Ok(ResonanceIndex { m, n_m: rho_star / (4.0 * PI), rho_star, triples })
}

/// Auxiliary function `h` of the geodesic-curvature problem and the source constant.
#[derive(Clone, Debug)]
pub struct GeodesicTransform {
    /// Nodal values of `h`.
    pub h: Vec<f64>,
    /// Interior source `2∫k_g ds_g / |Σ|`.
    pub source: f64,
}

/// Geodesic transform of the model's own boundary curvature.
pub fn geodesic_transform_model(op: &DiscreteOperator) -> Result<GeodesicTransform> {
    let model = op.model.clone();
    geodesic_transform(op, |t| model.boundary_curvature(t))
}

/// Solves `−Δh = 2∫k_g ds/|Σ|`, `∂_ν h = −2k_g`, `∫h = 0`.
pub fn geodesic_transform<F: Fn(f64) -> f64>(op: &DiscreteOperator, k_g: F) -> Result<GeodesicTransform> {
    let n = 1024;
    let mut total = 0.0;
    for k in 0..n {
        let t = 2.0 * PI * k as f64 / n as f64;
        total += k_g(t) * (0.5 * op.model.psi([t.cos(), t.sin()])).exp();
    }
    total *= 2.0 * PI / n as f64;
    let source = 2.0 * total / op.area();
    let mut load = op.load(|_| source);
    let flux = op.boundary_load(|x| -2.0 * k_g(x[1].atan2(x[0])));
    let scale: f64 = flux.iter().map(|v| v.abs()).sum::<f64>() + load.iter().map(|v| v.abs()).sum::<f64>();
    let defect: f64 = load.iter().sum::<f64>() + flux.iter().sum::<f64>();
    if defect.abs() > 1e-8 * scale.max(1.0) {
        return Err(Error::Data(format!("geodesic data violate compatibility by {defect:.3e}")));
    }
    for (l, f) in load.iter_mut().zip(&flux) {
        *l += f;
    }
    Ok(GeodesicTransform { h: op.solve(&load)?, source })
}

impl GeodesicTransform {
    /// `h(x)` by interpolation.
    pub fn value(&self, op: &DiscreteOperator, x: Point) -> Result<f64> {
        op.mesh
            .interpolate(&self.h, x)
            .ok_or_else(|| Error::Domain(format!("point ({}, {}) is outside the mesh", x[0], x[1])))
    }

    /// Transformed weight `V = 2K̃ e^{h}`, so that `K = V e^{−h_Q} = 2K̃ e^{−h_Q + h}`.
    pub fn weight(&self, op: &DiscreteOperator, k_tilde: f64, x: Point) -> Result<f64> {
        Ok(2.0 * k_tilde * self.value(op, x)?.exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::assemble;
    use crate::green::disk_oracle;
    use crate::surface::{mesh_model, Mark, Quadrature};
    use proptest::prelude::*;

    fn one() -> Expr {
        Expr::constant(1.0)
    }

    fn disk() -> SurfaceModel {
        SurfaceModel::flat_disk()
    }

    #[test]
    fn validation() {
        let m = disk();
        for g in [1.0, 0.0, 2.0, -1.0, -1.5] {
            assert!(SingularSet::new(&m, &[([0.1, 0.0], g)], one()).is_err(), "{g}");
        }
        assert!(SingularSet::new(&m, &[([0.1, 0.0], 0.5)], one()).is_ok());
        assert!(SingularSet::new(&m, &[([1.5, 0.0], 0.5)], one()).is_err());
        assert!(SingularSet::new(&m, &[], Expr::parse("x - 2").unwrap()).is_err());
        let s = SingularSet::new(&m, &[([0.0, 1.0], 0.5)], one()).unwrap();
        assert_eq!(s.points[0].location, Location::Boundary);
        assert_eq!(s.points[0].varrho(), 4.0 * PI);
    }

    #[test]
    fn empty_hq_vanishes() {
        let m = disk();
        let g = disk_oracle(&m).unwrap();
        let s = SingularSet::empty(&m, one()).unwrap();
        let hq = build_hq(&s, &g).unwrap();
        assert_eq!(hq.value([0.3, 0.2]).unwrap(), 0.0);
    }

    #[test]
    fn hq_coefficient_and_weak_form() {
        let m = disk();
        let g = disk_oracle(&m).unwrap();
        let xi = [0.3, -0.2];
        let s = SingularSet::new(&m, &[(xi, 0.5)], one()).unwrap();
        let hq = build_hq(&s, &g).unwrap();
        let x = [-0.4, 0.1];
        assert!((hq.value(x).unwrap() - 2.0 * PI * g.g(x, xi).unwrap()).abs() < 1e-13);
        // Test function (1 − r²)² has zero flux, −Δ = 8 − 16r² and mean 1/3.
        let mesh = mesh_model(&m, 0.05, &[Mark::new(xi, 1.0)]).unwrap();
        let quad = Quadrature::new(&mesh, &m);
        let lhs = quad.integrate(|q| hq.value(q.x).unwrap() * (8.0 - 16.0 * (q.x[0] * q.x[0] + q.x[1] * q.x[1]))).unwrap();
        let r2: f64 = xi[0] * xi[0] + xi[1] * xi[1];
        let rhs = 2.0 * PI * ((1.0 - r2).powi(2) - 1.0 / 3.0);
        assert!((lhs - rhs).abs() < 1e-4, "{lhs} {rhs}");
        let mean = quad.integrate(|q| hq.value(q.x).unwrap()).unwrap();
        assert!(mean.abs() < 1e-5, "{mean}");
    }

    #[test]
    fn local_factor_interior() {
        let m = disk();
        let g = disk_oracle(&m).unwrap();
        let xi = [0.2, 0.1];
        let s = SingularSet::new(&m, &[(xi, 0.5)], one()).unwrap();
        let k = build_k(build_hq(&s, &g).unwrap());
        assert_eq!(k.value(xi).unwrap(), 0.0);
        let ki = k.local(xi, 0.5).unwrap();
        let expect = (-(8.0 * PI * 0.5 / 2.0) * g.robin(xi).unwrap()).exp();
        assert!((ki.at_center().unwrap() / expect - 1.0).abs() < 1e-12);
        let rays = ki.rays(5).unwrap();
        assert!(rays.spread < 0.01, "{rays:?}");
        for l in &rays.limits {
            assert!((l / expect - 1.0).abs() < 0.01, "{l} {expect}");
        }
        // Regular point: K_i = K.
        let p = [-0.3, 0.4];
        let kr = k.local(p, 0.0).unwrap();
        assert_eq!(kr.value([-0.31, 0.4]).unwrap(), k.value([-0.31, 0.4]).unwrap());
        assert!(k.local(p, 0.5).is_err());
        assert!(k.local(xi, 0.7).is_err());
    }

    #[test]
    fn local_factor_boundary_and_negative() {
        let m = disk();
        let g = disk_oracle(&m).unwrap();
        let s = SingularSet::new(&m, &[([0.0, 1.0], 0.5), ([0.1, -0.3], -0.4)], one()).unwrap();
        let k = build_k(build_hq(&s, &g).unwrap());
        for (i, gamma) in [(0, 0.5), (1, -0.4)] {
            let ki = k.local(s.points[i].point, gamma).unwrap();
            let c = ki.at_center().unwrap();
            let rays = ki.rays(5).unwrap();
            assert!(rays.spread < 0.01, "{rays:?}");
            for l in &rays.limits {
                assert!((l / c - 1.0).abs() < 0.01, "{l} {c}");
            }
        }
    }

    #[test]
    fn resonance_examples() {
        let m = disk();
        let empty = SingularSet::empty(&m, one()).unwrap();
        let r = resonant_set(&empty, 13.0 * PI).unwrap();
        assert_eq!(r.values.len(), 3);
        for (v, e) in r.values.iter().zip([4.0, 8.0, 12.0]) {
            assert!((v - e * PI).abs() < 1e-12);
        }
        let b = SingularSet::new(&m, &[([1.0, 0.0], 0.5)], one()).unwrap();
        let r = resonant_set(&b, 40.0 * PI).unwrap();
        assert!(r.values.iter().any(|v| (v - 6.0 * PI).abs() < 1e-12));
        let idx = enumerate_index_sets(&b, 6.0 * PI).unwrap();
        assert_eq!(idx.triples, vec![IndexTriple { p: 0, q: 0, q1: vec![0] }]);
        assert_eq!(idx.m, 2);
        assert!((idx.n_m - 1.5).abs() < 1e-15);

        let i = SingularSet::new(&m, &[([0.2, 0.0], 0.5)], one()).unwrap();
        let idx = enumerate_index_sets(&i, 8.0 * PI).unwrap();
        assert!(idx.triples.contains(&IndexTriple { p: 1, q: 0, q1: vec![] }));
        assert!(idx.triples.contains(&IndexTriple { p: 0, q: 2, q1: vec![] }));
        assert!(idx.triples.iter().all(|t| t.q1.is_empty()));
        let idx = enumerate_index_sets(&i, 12.0 * PI).unwrap();
        let t = IndexTriple { p: 0, q: 0, q1: vec![0] };
        assert!(idx.triples.contains(&t));
        assert_eq!(t.gammas(&i), vec![0.5]);
        assert_eq!(t.gamma_star(&i), 0.5);
        assert!(enumerate_index_sets(&i, 5.0 * PI).is_err());
        assert!(resonant_set(&i, 0.0).is_err());
    }

    #[test]
    fn near_collisions_are_reported() {
        let m = disk();
        let gamma = 0.5 + 1e-8 / (8.0 * PI);
        let s = SingularSet::new(&m, &[([0.2, 0.0], gamma)], one()).unwrap();
        let r = resonant_set(&s, 12.5 * PI).unwrap();
        assert_eq!(r.collisions.len(), 1);
        assert!((r.collisions[0].gap - 1e-8).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn resonances_monotone_and_permutation_stable(g1 in 0.05f64..0.95, g2 in -0.9f64..-0.05, cap in 5.0f64..30.0) {
            let m = disk();
            let a = SingularSet::new(&m, &[([0.2, 0.0], g1), ([1.0, 0.0], g2)], one()).unwrap();
            let b = SingularSet::new(&m, &[([1.0, 0.0], g2), ([0.2, 0.0], g1)], one()).unwrap();
            let ra = resonant_set(&a, cap * PI).unwrap();
            let rb = resonant_set(&b, cap * PI).unwrap();
            prop_assert_eq!(ra.values.len(), rb.values.len());
            for (x, y) in ra.values.iter().zip(&rb.values) {
                prop_assert!((x - y).abs() < 1e-9);
            }
            let small = resonant_set(&a, 0.7 * cap * PI).unwrap();
            prop_assert!(small.values.iter().all(|v| ra.values.iter().any(|w| (v - w).abs() < 1e-12)));
            prop_assert!(ra.values.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn geodesic_flat_disk() {
        let m = disk();
        let op = assemble(&m, mesh_model(&m, 0.05, &[]).unwrap()).unwrap();
        let t = geodesic_transform_model(&op).unwrap();
        assert!((t.source - 4.0).abs() < 1e-12);
        let err = op
            .mesh
            .vertices
            .iter()
            .zip(&t.h)
            .map(|(x, h)| (h - (0.5 - x[0] * x[0] - x[1] * x[1])).abs())
            .fold(0.0, f64::max);
        assert!(err < 2e-3, "{err}");
        assert!(op.mean(&t.h).abs() < 1e-10);
        let z = geodesic_transform(&op, |_| 0.0).unwrap();
        assert!(z.h.iter().all(|v| v.abs() < 1e-12));
        assert!((t.weight(&op, 0.5, [0.0, 0.0]).unwrap() - t.value(&op, [0.0, 0.0]).unwrap().exp()).abs() < 1e-14);
    }
}
