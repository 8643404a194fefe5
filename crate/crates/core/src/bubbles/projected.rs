//! Bubbles pulled back through a chart, their Neumann projections, and the
//! projected kernel elements.
//!
//! A projection is stored as an exact singular part plus a smooth finite
//! element correction. For the bubble,
//! `Pδ = (1+γ)ϱ G(·,ξ) − 2χL + v + c` with `L = ln(1 + (λ|y|)^{−2(1+γ)})`,
//! where `v` solves a Neumann problem whose data live on the cutoff annulus.
//! For kernel elements, `PZ = χẑ + v_Z + c_Z`. Neither correction sees the
//! scale `1/λ`, so the mesh needs no resolution of the bubble core.

use super::profile::{zj, BubbleProfile};
use super::radial::{polar_nodes, radial_rule, PolarNode, RADIAL_POINTS};
use crate::elliptic::DiscreteOperator;
use crate::green::GreenProvider;
use crate::surface::{chart_at, Chart, CutoffProfile, QuadPoint, SurfaceModel};
use crate::{Error, Point, Result};

/// Angular Gauss points per quarter of the chart-polar rules.
pub const ANGULAR_POINTS: usize = 12;

/// Operator and Green provider shared by every projection on one mesh.
#[derive(Clone, Copy)]
pub struct Workspace<'a> {
    pub op: &'a DiscreteOperator,
    pub green: &'a dyn GreenProvider,
}

impl<'a> Workspace<'a> {
    pub fn new(op: &'a DiscreteOperator, green: &'a dyn GreenProvider) -> Self {
        Workspace { op, green }
    }

    pub fn model(&self) -> &'a SurfaceModel {
        &self.op.model
    }

    pub(crate) fn interpolate(&self, values: &[f64], x: Point) -> Result<f64> {
        self.op
            .mesh
            .interpolate(values, x)
            .ok_or_else(|| Error::Domain(format!("point ({}, {}) is outside the mesh", x[0], x[1])))
    }
}

/// Bubble `δ^γ_{λ,ξ}` with its chart and cutoff.
#[derive(Clone, Debug)]
pub struct Bubble {
    pub profile: BubbleProfile<f64>,
    pub lambda: f64,
    pub chart: Chart,
    pub cutoff: CutoffProfile<f64>,
}

/// Chart data of an ambient point inside `U(ξ)`.
#[derive(Clone, Copy, Debug)]
struct Local {
    y: Point,
    rho: f64,
    phi: f64,
    chi: f64,
    dchi: f64,
    lap_chi: f64,
}

impl Bubble {
    /// Fails for `γ ≤ −1`, non-positive `λ`, or a point outside the model.
    pub fn new(model: &SurfaceModel, xi: Point, gamma: f64, lambda: f64) -> Result<Self> {
        let profile = BubbleProfile::new(gamma)?;
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Parameter(format!("bubble scale λ = {lambda} must be positive")));
        }
        Ok(Bubble { profile, lambda, chart: chart_at(model, xi)?, cutoff: CutoffProfile::default() })
    }

    pub fn gamma(&self) -> f64 {
        self.profile.gamma
    }

    /// `1 + γ`.
    pub fn a(&self) -> f64 {
        self.profile.a()
    }

    pub fn center(&self) -> Point {
        self.chart.center
    }

    pub fn varrho(&self) -> f64 {
        self.chart.varrho()
    }

    /// Number of translation modes `i(ξ)`.
    pub fn translations(&self) -> usize {
        if self.chart.is_boundary() {
            1
        } else {
            2
        }
    }

    /// Support radius of `χ_ξ` in the chart.
    pub fn support(&self) -> f64 {
        0.5 * self.chart.radius
    }

    fn local(&self, x: Point) -> Option<Local> {
        if !self.chart.covers(x) {
            return None;
        }
        let (y, phi) = self.chart.local(x);
        let rho = y[0].hypot(y[1]);
        let (chi, dchi, lap_chi) = self.chart.cutoff_radial(&self.cutoff, rho);
        Some(Local { y, rho, phi, chi, dchi, lap_chi })
    }

    /// `δ^γ_{λ,ξ}(x)`, zero outside the chart domain.
    pub fn delta(&self, x: Point) -> f64 {
        match self.local(x) {
            Some(l) => self.profile.delta(self.lambda, l.rho),
            None => 0.0,
        }
    }

    /// `χ |y|^{2γ} e^{δ}` at chart radius `rho`: the projection load per unit `dy`.
    pub fn density_dy(&self, rho: f64) -> f64 {
        let chi = self.chart.cutoff_radial(&self.cutoff, rho).0;
        if chi == 0.0 || rho == 0.0 {
            return 0.0;
        }
        chi * self.profile.log_weighted_density(self.lambda, rho).exp()
    }

    /// `χ e^{−φ} |y|^{2γ} e^{δ}` at an ambient point: the load per unit `dv_g`.
    pub fn source(&self, x: Point) -> f64 {
        match self.local(x) {
            Some(l) if l.chi > 0.0 && l.rho > 0.0 => {
                l.chi * (self.profile.log_weighted_density(self.lambda, l.rho) - l.phi).exp()
            }
            _ => 0.0,
        }
    }

    /// Radial rule on the support of `χ`, graded at `1/λ`.
    pub fn radial_nodes(&self) -> Vec<(f64, f64)> {
        radial_rule(self.support(), 1.0 / self.lambda, 2.0 / self.a(), RADIAL_POINTS)
    }

    /// Chart-polar nodes on the support of `χ`, graded at `1/λ`.
    pub fn polar_nodes(&self) -> Vec<PolarNode> {
        polar_nodes(&self.chart, self.support(), 1.0 / self.lambda, 2.0 / self.a(), ANGULAR_POINTS)
    }

    /// Mass `∫ χ e^{−φ}|y|^{2γ} e^{δ} dv_g = ∫ χ |y|^{2γ} e^{δ} dy`.
    pub fn mass(&self) -> f64 {
        let ext = self.chart.angular_extent();
        ext * self.radial_nodes().iter().map(|&(r, w)| w * r * self.density_dy(r)).sum::<f64>()
    }

    /// `(1+γ)ϱ(ξ)`, the limit of [`Bubble::mass`].
    pub fn target_mass(&self) -> f64 {
        self.a() * self.varrho()
    }

    /// Annulus data of `−Δ_g(−2χL) = χe^{−φ}|y|^{2γ}e^{δ} − S`.
    fn bubble_defect(&self, x: Point) -> f64 {
        match self.local(x) {
            Some(l) if l.dchi != 0.0 || l.lap_chi != 0.0 => {
                let (tail, dtail) = self.profile.tail(self.lambda, l.rho);
                -(-l.phi).exp() * (4.0 * l.dchi * dtail + 2.0 * tail * l.lap_chi)
            }
            _ => 0.0,
        }
    }

    /// `2 ln(|y|^{2(1+γ)} + λ^{−2(1+γ)}) = 4(1+γ) ln|y| + 2L`, finite at the centre.
    fn log_core(&self, rho: f64) -> f64 {
        let a = self.a();
        let lt = 2.0 * a * (self.lambda * rho).ln();
        let ll = -2.0 * a * self.lambda.ln();
        // ln(e^{lt} + 1) + ll, with lt = ln t.
        let softplus = if lt > 0.0 { lt + (-lt).exp().ln_1p() } else { lt.exp().ln_1p() };
        2.0 * (softplus + ll)
    }
}

/// Solution of the projected bubble problem.
#[derive(Clone)]
pub struct ProjectedBubble<'a> {
    pub bubble: Bubble,
    pub ws: Workspace<'a>,
    /// Nodal values of the smooth correction `v`.
    pub v: Vec<f64>,
    /// Zero-mean constant `c = 2∫χL dv_g/|Σ|`.
    pub constant: f64,
    pub mass: f64,
}

/// Projects `δ^γ_{λ,ξ}` onto zero-mean Neumann data.
pub fn project_bubble<'a>(ws: Workspace<'a>, xi: Point, gamma: f64, lambda: f64) -> Result<ProjectedBubble<'a>> {
    let bubble = Bubble::new(ws.model(), xi, gamma, lambda)?;
    let load = ws.op.load(|q: &QuadPoint| bubble.bubble_defect(q.x));
    let v = ws.op.solve(&load)?;
    let int_tail: f64 = bubble
        .polar_nodes()
        .iter()
        .map(|n| {
            let chi = bubble.chart.cutoff_radial(&bubble.cutoff, n.rho).0;
            n.w * chi * bubble.profile.tail(lambda, n.rho).0 * n.phi.exp()
        })
        .sum();
    let constant = 2.0 * int_tail / ws.op.area();
    let mass = bubble.mass();
    Ok(ProjectedBubble { bubble, ws, v, constant, mass })
}

impl ProjectedBubble<'_> {
    /// Smooth part `v + c` at `x`.
    pub fn smooth(&self, x: Point) -> Result<f64> {
        Ok(self.ws.interpolate(&self.v, x)? + self.constant)
    }

    /// `Pδ(x)`.
    pub fn value(&self, x: Point) -> Result<f64> {
        let b = &self.bubble;
        let mass = b.target_mass();
        let c = b.center();
        let core = match b.local(x) {
            Some(l) if l.chi > 0.0 => mass * self.ws.green.h(x, c)? - l.chi * b.log_core(l.rho),
            _ => mass * self.ws.green.g(x, c)?,
        };
        Ok(core + self.smooth(x)?)
    }

    /// Comparator `χ(δ − ln(8(1+γ)²λ^{−2(1+γ)})) + (1+γ)ϱH(·,ξ) + ε₀`, without `ε₀`.
    ///
    /// The difference `Pδ − comparator` equals `v + c`.
    pub fn comparator(&self, x: Point) -> Result<f64> {
        let b = &self.bubble;
        let mass = b.target_mass();
        let c = b.center();
        let chi_log = match b.local(x) {
            Some(l) if l.chi > 0.0 => l.chi * b.log_core(l.rho),
            _ => 0.0,
        };
        Ok(mass * self.ws.green.h(x, c)? - chi_log)
    }
}

/// Projected kernel element `PZ^j`.
#[derive(Clone)]
pub struct KernelElement<'a> {
    pub bubble: Bubble,
    pub ws: Workspace<'a>,
    /// `0` for the dilation mode, `1..=i(ξ)` for translations.
    pub j: usize,
    pub v: Vec<f64>,
    pub constant: f64,
}

/// Kernel profile before cutoff: `ẑ = 4(1+γ)/(1+t)` for `j = 0`, `z_j(λy)` otherwise,
/// with its gradient in `y`.
fn kernel_profile(b: &Bubble, j: usize, y: Point, rho: f64) -> (f64, [f64; 2]) {
    if j == 0 {
        let (v, dv) = b.profile.z0_shifted(b.lambda, rho);
        if rho == 0.0 {
            return (v, [0.0; 2]);
        }
        (v, [dv * y[0] / rho, dv * y[1] / rho])
    } else {
        zj(j - 1, b.lambda, y)
    }
}

/// Projects `Z^j` of the bubble at `xi`.
///
/// Translation modes exist only for regular centres (`γ = 0`) and `j ≤ i(ξ)`.
pub fn project_z<'a>(ws: Workspace<'a>, xi: Point, gamma: f64, lambda: f64, j: usize) -> Result<KernelElement<'a>> {
    let bubble = Bubble::new(ws.model(), xi, gamma, lambda)?;
    if j > bubble.translations() {
        return Err(Error::Validation(format!("mode j = {j} exceeds i(ξ) = {}", bubble.translations())));
    }
    if j > 0 && gamma != 0.0 {
        return Err(Error::Validation("translation modes need a regular centre".into()));
    }
    // −Δ_g(χẑ) = χ e^{−φ}|y|^{2γ}e^{δ} Z − S_Z with S_Z = e^{−φ}(2∇χ·∇ẑ + ẑΔχ).
    let load = ws.op.load(|q: &QuadPoint| match bubble.local(q.x) {
        Some(l) if l.dchi != 0.0 || l.lap_chi != 0.0 => {
            let (z, dz) = kernel_profile(&bubble, j, l.y, l.rho);
            let radial = (dz[0] * l.y[0] + dz[1] * l.y[1]) / l.rho;
            (-l.phi).exp() * (2.0 * l.dchi * radial + z * l.lap_chi)
        }
        _ => 0.0,
    });
    let v = ws.op.solve(&load)?;
    let int_z: f64 = bubble
        .polar_nodes()
        .iter()
        .map(|n| {
            let chi = bubble.chart.cutoff_radial(&bubble.cutoff, n.rho).0;
            n.w * chi * kernel_profile(&bubble, j, n.y, n.rho).0 * n.phi.exp()
        })
        .sum();
    let constant = -int_z / ws.op.area();
    Ok(KernelElement { bubble, ws, j, v, constant })
}

impl KernelElement<'_> {
    /// `Z^j(x)` without cutoff, zero outside the chart domain.
    pub fn z(&self, x: Point) -> f64 {
        match self.bubble.local(x) {
            Some(l) => {
                let v = kernel_profile(&self.bubble, self.j, l.y, l.rho).0;
                if self.j == 0 {
                    v - 2.0 * self.bubble.a()
                } else {
                    v
                }
            }
            None => 0.0,
        }
    }

    /// Comparator `χẑ`; the difference `PZ − χẑ` is `v_Z + c_Z`.
    pub fn comparator(&self, x: Point) -> f64 {
        match self.bubble.local(x) {
            Some(l) if l.chi > 0.0 => l.chi * kernel_profile(&self.bubble, self.j, l.y, l.rho).0,
            _ => 0.0,
        }
    }

    pub fn smooth(&self, x: Point) -> Result<f64> {
        Ok(self.ws.interpolate(&self.v, x)? + self.constant)
    }

    /// `PZ^j(x)`.
    pub fn value(&self, x: Point) -> Result<f64> {
        Ok(self.comparator(x) + self.smooth(x)?)
    }
}

/// Common view of the projections used by the Dirichlet pairing.
pub trait Projection {
    fn bubble(&self) -> &Bubble;
    /// Load before mean removal, per unit `dy` at a polar node.
    fn load_dy(&self, node: &PolarNode) -> f64;
    fn value(&self, x: Point) -> Result<f64>;
}

impl Projection for ProjectedBubble<'_> {
    fn bubble(&self) -> &Bubble {
        &self.bubble
    }

    fn load_dy(&self, node: &PolarNode) -> f64 {
        self.bubble.density_dy(node.rho)
    }

    fn value(&self, x: Point) -> Result<f64> {
        ProjectedBubble::value(self, x)
    }
}

impl Projection for KernelElement<'_> {
    fn bubble(&self) -> &Bubble {
        &self.bubble
    }

    fn load_dy(&self, node: &PolarNode) -> f64 {
        let b = &self.bubble;
        let z = kernel_profile(b, self.j, node.y, node.rho).0;
        let z = if self.j == 0 { z - 2.0 * b.a() } else { z };
        b.density_dy(node.rho) * z
    }

    fn value(&self, x: Point) -> Result<f64> {
        KernelElement::value(self, x)
    }
}

/// `⟨A, B⟩ = ∫∇A·∇B = ∫(−Δ_g A) B dv_g` for zero-mean projections.
pub fn dirichlet(a: &dyn Projection, b: &dyn Projection) -> Result<f64> {
    let mut s = 0.0;
    for n in a.bubble().polar_nodes() {
        let f = a.load_dy(&n);
        if f != 0.0 {
            s += n.w * f * b.value(n.x)?;
        }
    }
    Ok(s)
}

/// Expected diagonal `⟨Pδ, Pδ⟩ ≈ −2(1+γ)ϱ + 4(1+γ)²ϱ ln λ + (1+γ)²ϱ²R + 2(1+γ)ϱε₀`.
pub fn diagonal_expansion(gamma: f64, lambda: f64, varrho: f64, robin: f64, eps0: f64) -> f64 {
    let a = 1.0 + gamma;
    -2.0 * a * varrho + 4.0 * a * a * varrho * lambda.ln() + a * a * varrho * varrho * robin + 2.0 * a * varrho * eps0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubbles::ScaleConstants;
    use crate::elliptic::assemble;
    use crate::green::disk_oracle;
    use crate::surface::{mesh_model, SurfaceModel};
    use std::f64::consts::PI;

    fn setup(h: f64) -> (DiscreteOperator, crate::green::DiskGreen) {
        let m = SurfaceModel::flat_disk();
        (assemble(&m, mesh_model(&m, h, &[]).unwrap()).unwrap(), disk_oracle(&m).unwrap())
    }

    #[test]
    fn peak_and_support() {
        let m = SurfaceModel::flat_disk();
        let b = Bubble::new(&m, [0.0, 0.0], 0.0, 1.0).unwrap();
        assert!((b.delta([0.0, 0.0]) - 8f64.ln()).abs() < 1e-14);
        let b = Bubble::new(&m, [0.5, 0.0], 0.0, 1.0).unwrap();
        assert_eq!(b.delta([-0.9, 0.0]), 0.0);
        assert!(Bubble::new(&m, [0.0, 0.0], -1.0, 10.0).is_err());
        assert!(Bubble::new(&m, [0.0, 0.0], 0.5, 0.0).is_err());
    }

    #[test]
    fn masses() {
        let m = SurfaceModel::flat_disk();
        for gamma in [-0.5, 0.0, 0.5] {
            let lambda = 1e3f64.powf(1.0 / (1.0 + gamma));
            for (xi, rho) in [([0.0, 0.0], 8.0 * PI), ([0.0, 1.0], 4.0 * PI)] {
                let b = Bubble::new(&m, xi, gamma, lambda).unwrap();
                let rel = b.mass() / ((1.0 + gamma) * rho) - 1.0;
                assert!(rel.abs() < 1e-3, "γ={gamma} ξ={xi:?} rel={rel}");
            }
        }
    }

    #[test]
    fn projection_is_zero_mean_and_matches_comparator() {
        let (op, g) = setup(0.05);
        let ws = Workspace::new(&op, &g);
        for (xi, gamma) in [([0.1, 0.0], 0.0), ([0.0, -1.0], 0.5), ([-0.2, 0.1], -0.4)] {
            let lambda = 1e3f64.powf(1.0 / (1.0 + gamma));
            let p = project_bubble(ws, xi, gamma, lambda).unwrap();
            let mean = op.quad.integrate(|q| p.value(q.x).unwrap_or(0.0)).unwrap();
            // The mesh quadrature does not resolve the core; the far field dominates.
            assert!(mean.abs() < 0.05, "{mean}");
            let eps0 = ScaleConstants::new(gamma, lambda, p.bubble.varrho(), op.area()).unwrap().eps0;
            let x = [0.6, 0.5];
            let gap = p.value(x).unwrap() - p.comparator(x).unwrap() - eps0;
            // The remainder is O(λ^{−2(1+γ)}) with a chart-dependent constant.
            assert!(gap.abs() < 5e-3, "γ={gamma} gap={gap}");
        }
    }

    #[test]
    fn kernel_ranges() {
        let (op, g) = setup(0.08);
        let ws = Workspace::new(&op, &g);
        let z = project_z(ws, [0.0, 0.0], 0.5, 10.0, 0).unwrap();
        for k in 0..50 {
            let x = [0.01 * k as f64, 0.0];
            let v = z.z(x);
            assert!(v.abs() <= 3.0 + 1e-12);
        }
        assert!(project_z(ws, [0.0, 0.0], 0.5, 10.0, 1).is_err());
        assert!(project_z(ws, [0.0, 1.0], 0.0, 10.0, 2).is_err());
    }

    #[test]
    fn inner_products() {
        let (op, g) = setup(0.05);
        let ws = Workspace::new(&op, &g);
        let xi = [0.1, -0.1];
        let lambda = 300.0;
        let p = project_bubble(ws, xi, 0.0, lambda).unwrap();
        let eps0 = ScaleConstants::new(0.0, lambda, 8.0 * PI, op.area()).unwrap().eps0;
        let expect = diagonal_expansion(0.0, lambda, 8.0 * PI, g.robin(xi).unwrap(), eps0);
        let got = dirichlet(&p, &p).unwrap();
        assert!((got / expect - 1.0).abs() < 0.01, "{got} {expect}");
        let z1 = project_z(ws, xi, 0.0, lambda, 1).unwrap();
        let z2 = project_z(ws, xi, 0.0, lambda, 2).unwrap();
        let d = dirichlet(&z1, &z1).unwrap();
        assert!((d / (4.0 / 3.0 * 8.0 * PI) - 1.0).abs() < 0.03, "{d}");
        let c = dirichlet(&z1, &z2).unwrap();
        assert!(c.abs() < 0.03 * d, "{c}");
        let q = project_bubble(ws, [-0.4, 0.3], 0.0, lambda).unwrap();
        let off = dirichlet(&p, &q).unwrap();
        let target = 64.0 * PI * PI * g.g(xi, [-0.4, 0.3]).unwrap();
        assert!((off - target).abs() < 0.03 * target.abs(), "{off} {target}");
    }
}
