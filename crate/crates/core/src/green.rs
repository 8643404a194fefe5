//! Neumann Green functions, their regular parts and Robin functions.
//!
//! `G(·,ξ)` solves `−Δ_g G = δ_ξ − 1/|Σ|` with zero flux and zero mean. Near
//! `ξ` it splits as `Γ + H` with `Γ = −(4/ϱ(ξ)) χ_ξ ln|y_ξ|`.

use crate::elliptic::DiscreteOperator;
use crate::fit::least_squares;
use crate::surface::quadrature::gauss_legendre_on;
use crate::surface::{chart_at, Chart, CutoffProfile, SurfaceModel};
use crate::{Error, Point, Result};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

/// Access to `G`, `R` and their source derivatives.
///
/// Gradients are ambient; for boundary sources only the tangential component
/// is meaningful and the normal component is zero.
pub trait GreenProvider: Send + Sync {
    fn model(&self) -> &SurfaceModel;
    /// `G(x, ξ)`.
    fn g(&self, x: Point, xi: Point) -> Result<f64>;
    /// `∇_ξ G(x, ξ)`.
    fn grad_xi(&self, x: Point, xi: Point) -> Result<[f64; 2]>;
    /// `H(x, ξ) = G(x, ξ) + (4/ϱ(ξ)) χ_ξ(x) ln|y_ξ(x)|`, equal to `R(ξ)` at `x = ξ`.
    fn h(&self, x: Point, xi: Point) -> Result<f64>;
    /// `R(ξ) = H(ξ, ξ)`.
    fn robin(&self, xi: Point) -> Result<f64>;
    /// `∇R(ξ)`.
    fn robin_grad(&self, xi: Point) -> Result<[f64; 2]>;
}

/// Unit tangent of the circle at `xi`.
pub fn tangent(xi: Point) -> [f64; 2] {
    let r = xi[0].hypot(xi[1]);
    [-xi[1] / r, xi[0] / r]
}

fn project_tangent(g: [f64; 2], xi: Point) -> [f64; 2] {
    let t = tangent(xi);
    let s = g[0] * t[0] + g[1] * t[1];
    [s * t[0], s * t[1]]
}

/// Closed-form Neumann Green function of the flat unit disk.
///
/// `G(x,ξ) = −(1/4π)[ln|x−ξ|² + ln(|ξ|²|x|² − 2x·ξ + 1)] + (|x|²+|ξ|²)/(4π) − 3/(8π)`:
/// a source, its image across the circle, and a quadratic absorbing the
/// uniform sink. The formula also covers boundary sources.
#[derive(Clone, Debug)]
pub struct DiskGreen {
    model: SurfaceModel,
}

/// The image-formula oracle; fails for non-flat models.
pub fn disk_oracle(model: &SurfaceModel) -> Result<DiskGreen> {
    if !model.is_flat() {
        return Err(Error::Unsupported("closed-form Green function exists only for the flat disk".into()));
    }
    Ok(DiskGreen { model: model.clone() })
}

impl DiskGreen {
    fn on_boundary(xi: Point) -> bool {
        xi[0].hypot(xi[1]) >= 1.0 - 1e-12
    }

    /// Regular part `H(x,ξ) = G(x,ξ) + (4/ϱ) χ_ξ(x) ln|y_ξ(x)|` in the standard chart.
    pub fn regular(&self, x: Point, xi: Point, profile: &CutoffProfile<f64>) -> Result<f64> {
        let chart = chart_at(&self.model, xi)?;
        let y = chart.to_chart(x);
        let rho = y[0].hypot(y[1]);
        let chi = profile.value(4.0 * rho / chart.radius);
        if rho == 0.0 {
            return self.robin(xi);
        }
        Ok(self.g(x, xi)? + 4.0 / chart.varrho() * chi * rho.ln())
    }

    /// Flat Laplacian of `G(·, ξ)` by a five-point stencil (oracle self-check).
    pub fn laplacian_fd(&self, x: Point, xi: Point, h: f64) -> Result<f64> {
        let c = self.g(x, xi)?;
        let mut s = -4.0 * c;
        for d in [[h, 0.0], [-h, 0.0], [0.0, h], [0.0, -h]] {
            s += self.g([x[0] + d[0], x[1] + d[1]], xi)?;
        }
        Ok(s / (h * h))
    }
}

impl GreenProvider for DiskGreen {
    fn model(&self) -> &SurfaceModel {
        &self.model
    }

    fn g(&self, x: Point, xi: Point) -> Result<f64> {
        let dx = [x[0] - xi[0], x[1] - xi[1]];
        let r2 = dx[0] * dx[0] + dx[1] * dx[1];
        if r2 == 0.0 {
            return Err(Error::Domain("Green function evaluated at its source".into()));
        }
        let x2 = x[0] * x[0] + x[1] * x[1];
        let xi2 = xi[0] * xi[0] + xi[1] * xi[1];
        let d = xi2 * x2 - 2.0 * (x[0] * xi[0] + x[1] * xi[1]) + 1.0;
        Ok(-(r2.ln() + d.ln()) / (4.0 * PI) + (x2 + xi2) / (4.0 * PI) - 3.0 / (8.0 * PI))
    }

    fn grad_xi(&self, x: Point, xi: Point) -> Result<[f64; 2]> {
        let dx = [x[0] - xi[0], x[1] - xi[1]];
        let r2 = dx[0] * dx[0] + dx[1] * dx[1];
        if r2 == 0.0 {
            return Err(Error::Domain("Green gradient evaluated at its source".into()));
        }
        let x2 = x[0] * x[0] + x[1] * x[1];
        let xi2 = xi[0] * xi[0] + xi[1] * xi[1];
        let d = xi2 * x2 - 2.0 * (x[0] * xi[0] + x[1] * xi[1]) + 1.0;
        let mut g = [0.0; 2];
        for k in 0..2 {
            g[k] = -(-2.0 * dx[k] / r2 + (2.0 * x2 * xi[k] - 2.0 * x[k]) / d) / (4.0 * PI) + xi[k] / (2.0 * PI);
        }
        Ok(if Self::on_boundary(xi) { project_tangent(g, xi) } else { g })
    }

    fn h(&self, x: Point, xi: Point) -> Result<f64> {
        self.regular(x, xi, &CutoffProfile::default())
    }

    fn robin(&self, xi: Point) -> Result<f64> {
        self.model.locate(xi)?;
        if Self::on_boundary(xi) {
            return Ok(1.0 / (8.0 * PI));
        }
        let s = xi[0] * xi[0] + xi[1] * xi[1];
        Ok(-(1.0 - s).ln() / (2.0 * PI) + s / (2.0 * PI) - 3.0 / (8.0 * PI))
    }

    fn robin_grad(&self, xi: Point) -> Result<[f64; 2]> {
        self.model.locate(xi)?;
        if Self::on_boundary(xi) {
            return Ok([0.0, 0.0]);
        }
        let s = xi[0] * xi[0] + xi[1] * xi[1];
        let f = 1.0 / (PI * (1.0 - s)) + 1.0 / PI;
        Ok([f * xi[0], f * xi[1]])
    }
}

/// How `G(·, ξ)` is split before the finite element solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Split {
    /// Global singular part `−(4/ϱ) ln|x − ξ|`: the remaining problem has
    /// smooth Neumann data and no cutoff layer.
    #[default]
    GlobalLog,
    /// Cutoff singular part `Γ = −(4/ϱ) χ_ξ ln|y_ξ|`; the solve yields `H` directly.
    Cutoff,
}

/// `G(·, ξ)` on a mesh: an analytic singular part plus a nodal smooth part.
#[derive(Clone, Debug)]
pub struct GreenField {
    pub xi: Point,
    pub chart: Chart,
    pub varrho: f64,
    pub split: Split,
    /// Nodal values of `G` minus the split's singular part.
    pub smooth: Vec<f64>,
    pub profile: CutoffProfile<f64>,
}

/// Robin value and its gradient in chart coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct RobinData {
    pub value: f64,
    /// Two components for interior sources, one (tangential) on the boundary.
    pub grad: Vec<f64>,
}

impl GreenField {
    /// `Γ(x) = −(4/ϱ) χ_ξ(x) ln|y_ξ(x)|`.
    pub fn gamma(&self, x: Point) -> f64 {
        if !self.chart.covers(x) {
            return 0.0;
        }
        let y = self.chart.to_chart(x);
        let rho = y[0].hypot(y[1]);
        let chi = self.profile.value(4.0 * rho / self.chart.radius);
        if chi == 0.0 {
            0.0
        } else {
            -4.0 / self.varrho * chi * rho.ln()
        }
    }

    fn singular(&self, x: Point) -> f64 {
        match self.split {
            Split::Cutoff => self.gamma(x),
            Split::GlobalLog => -4.0 / self.varrho * (x[0] - self.xi[0]).hypot(x[1] - self.xi[1]).ln(),
        }
    }

    /// `(G − Γ) − smooth part` at `x`, continuous at the source.
    fn correction(&self, x: Point) -> f64 {
        match self.split {
            Split::Cutoff => 0.0,
            Split::GlobalLog => {
                let d = (x[0] - self.xi[0]).hypot(x[1] - self.xi[1]);
                if d < 1e-300 {
                    return -4.0 / self.varrho * self.chart.distance_ratio(self.xi).ln();
                }
                let mut c = -4.0 / self.varrho * d.ln();
                c -= self.gamma(x);
                c
            }
        }
    }

    fn smooth_at(&self, op: &DiscreteOperator, x: Point) -> Result<f64> {
        op.mesh
            .interpolate(&self.smooth, x)
            .ok_or_else(|| Error::Domain(format!("point ({}, {}) is outside the mesh", x[0], x[1])))
    }

    /// `H(x, ξ) = G(x, ξ) − Γ(x)`.
    pub fn regular(&self, op: &DiscreteOperator, x: Point) -> Result<f64> {
        Ok(self.smooth_at(op, x)? + self.correction(x))
    }

    /// `G(x, ξ)`.
    pub fn value(&self, op: &DiscreteOperator, x: Point) -> Result<f64> {
        Ok(self.singular(x) + self.smooth_at(op, x)?)
    }

    /// Nodal values of `G`; the source vertex, if any, gets `+∞`.
    pub fn nodal_g(&self, op: &DiscreteOperator) -> Vec<f64> {
        op.mesh.vertices.iter().zip(&self.smooth).map(|(&x, s)| self.singular(x) + s).collect()
    }

    /// `R(ξ)` from a quadratic fit of `H` over nodes with `|y| < r_ξ/4`.
    pub fn robin_value(&self, op: &DiscreteOperator) -> Result<f64> {
        let mut radius = self.chart.radius / 4.0;
        loop {
            let mut rows = Vec::new();
            let mut rhs = Vec::new();
            for (v, &x) in op.mesh.vertices.iter().enumerate() {
                if !self.chart.covers(x) {
                    continue;
                }
                let y = self.chart.to_chart(x);
                if y[0].hypot(y[1]) < radius {
                    let (a, b) = (y[0] / radius, y[1] / radius);
                    rows.push(vec![1.0, a, b, a * a, a * b, b * b]);
                    rhs.push(self.smooth[v] + self.correction(x));
                }
            }
            if rows.len() >= 12 {
                return Ok(least_squares(&rows, &rhs)?[0]);
            }
            if radius >= self.chart.radius {
                return Err(Error::Numeric("too few chart nodes for the Robin fit".into()));
            }
            radius *= 2.0;
        }
    }
}

/// `∫_Σ ln|x − ξ| dv_g` by polar quadrature centred at `ξ`.
pub fn log_moment(model: &SurfaceModel, xi: Point) -> f64 {
    let bnd = xi[0].hypot(xi[1]) >= 1.0 - 1e-12;
    let (t0, extent) = if bnd {
        let th = xi[1].atan2(xi[0]);
        (th + 0.5 * PI, PI)
    } else {
        (0.0, 2.0 * PI)
    };
    let panels = 8;
    let (ts, wt) = gauss_legendre_on::<f64>(24, 0.0, extent / panels as f64);
    let (us, wu) = gauss_legendre_on::<f64>(40, 0.0, 1.0);
    let xi2 = xi[0] * xi[0] + xi[1] * xi[1];
    let mut total = 0.0;
    for p in 0..panels {
        for (&t, &w) in ts.iter().zip(&wt) {
            let a = t0 + p as f64 * extent / panels as f64 + t;
            let e = [a.cos(), a.sin()];
            let b = xi[0] * e[0] + xi[1] * e[1];
            let s = -b + (b * b + (1.0 - xi2).max(0.0)).sqrt();
            if s <= 0.0 {
                continue;
            }
            let mut ray = 0.0;
            for (&u, &v) in us.iter().zip(&wu) {
                let rho = s * u * u;
                let x = [xi[0] + rho * e[0], xi[1] + rho * e[1]];
                ray += v * 2.0 * s * u * rho * rho.ln() * model.density(x);
            }
            total += w * ray;
        }
    }
    total
}

/// Solves for `G(·, ξ)` with the default split and cutoff.
pub fn green(op: &DiscreteOperator, xi: Point) -> Result<GreenField> {
    green_with(op, xi, CutoffProfile::default(), Split::default())
}

/// Solves for `G(·, ξ)` with a chosen cutoff profile and split.
pub fn green_with(op: &DiscreteOperator, xi: Point, profile: CutoffProfile<f64>, split: Split) -> Result<GreenField> {
    let chart = chart_at(&op.model, xi)?;
    let varrho = chart.varrho();
    let area = op.area();
    let r = chart.radius;
    let coef = 4.0 / varrho;
    let center = chart.center;
    let (mut smooth, int_singular) = match split {
        Split::Cutoff => {
            // −Δ_g H = −1/|Σ| − (4/ϱ) e^{−φ̂} (2 ∇χ·∇ln|y| + ln|y| Δχ).
            let load = op.load(|q| {
                let mut f = -1.0 / area;
                if chart.covers(q.x) {
                    let (y, phi) = chart.local(q.x);
                    let rho = y[0].hypot(y[1]);
                    let (_, dchi, lap) = profile.radial(rho, 4.0 / r);
                    if dchi != 0.0 || lap != 0.0 {
                        f -= coef * (-phi).exp() * (2.0 * dchi / rho + rho.ln() * lap);
                    }
                }
                f
            });
            let int_gamma = -coef
                * chart.polar_integral(0.5 * r, 48, 24, |y, rho| {
                    let chi = profile.value(4.0 * rho / r);
                    if chi == 0.0 {
                        0.0
                    } else {
                        chi * rho.ln() * chart.phi_hat(y).exp()
                    }
                });
            (op.solve(&load)?, int_gamma)
        }
        Split::GlobalLog => {
            // −Δ_g H̃ = −1/|Σ| and ∂_ν H̃ = (4/ϱ) ∂_r ln|x − ξ| on the circle;
            // the boundary load is metric-free.
            let mut load = op.load(|_| -1.0 / area);
            let ds_flux = |x: Point| {
                let d = [x[0] - center[0], x[1] - center[1]];
                let d2 = d[0] * d[0] + d[1] * d[1];
                if d2 < 1e-300 {
                    0.0
                } else {
                    coef * (x[0] * d[0] + x[1] * d[1]) / d2 * (-0.5 * op.model.psi(x)).exp()
                }
            };
            for (b, g) in load.iter_mut().zip(op.boundary_load(ds_flux)) {
                *b += g;
            }
            (op.solve(&load)?, -coef * log_moment(&op.model, center))
        }
    };
    let shift = -int_singular / area;
    smooth.iter_mut().for_each(|v| *v += shift);
    Ok(GreenField { xi: center, chart, varrho, split, smooth, profile })
}

/// Robin value and chart-coordinate gradient by centred differences over
/// re-solves with step `2h`.
pub fn robin(op: &DiscreteOperator, xi: Point) -> Result<RobinData> {
    let field = green(op, xi)?;
    let value = field.robin_value(op)?;
    let step = 2.0 * op.mesh.h;
    let scale = field.chart.distance_ratio(field.chart.center);
    let eval = |p: Point| green(op, p).and_then(|f| f.robin_value(op));
    let grad = if field.chart.is_boundary() {
        let th = xi[1].atan2(xi[0]);
        let p = |t: f64| [t.cos(), t.sin()];
        vec![scale * (eval(p(th + step))? - eval(p(th - step))?) / (2.0 * step)]
    } else {
        let mut g = Vec::with_capacity(2);
        for k in 0..2 {
            let mut a = xi;
            let mut b = xi;
            a[k] += step;
            b[k] -= step;
            g.push(scale * (eval(a)? - eval(b)?) / (2.0 * step));
        }
        g
    };
    Ok(RobinData { value, grad })
}

/// Finite element Green provider with a per-source cache.
pub struct FemGreen<'a> {
    op: &'a DiscreteOperator,
    profile: CutoffProfile<f64>,
    cache: Mutex<HashMap<(u64, u64), Arc<GreenField>>>,
    store: Option<GreenCache>,
}

impl<'a> FemGreen<'a> {
    pub fn new(op: &'a DiscreteOperator) -> Self {
        FemGreen { op, profile: CutoffProfile::default(), cache: Mutex::new(HashMap::new()), store: None }
    }

    /// Persists regular parts in `cache` between runs.
    pub fn with_store(mut self, cache: GreenCache) -> Self {
        self.store = Some(cache);
        self
    }

    pub fn operator(&self) -> &DiscreteOperator {
        self.op
    }

    /// Cached field for source `xi`.
    pub fn field(&self, xi: Point) -> Result<Arc<GreenField>> {
        let key = (xi[0].to_bits(), xi[1].to_bits());
        if let Some(f) = self.cache.lock().map_err(|_| Error::Numeric("poisoned cache".into()))?.get(&key) {
            return Ok(f.clone());
        }
        let field = match self.store.as_ref().and_then(|s| s.load(self.op, xi).ok().flatten()) {
            Some(h) => {
                let chart = chart_at(&self.op.model, xi)?;
                GreenField {
                    xi: chart.center,
                    varrho: chart.varrho(),
                    chart,
                    split: Split::default(),
                    smooth: h,
                    profile: self.profile,
                }
            }
            None => {
                let f = green_with(self.op, xi, self.profile, Split::default())?;
                if let Some(s) = &self.store {
                    s.save(self.op, xi, &f.smooth)?;
                }
                f
            }
        };
        let field = Arc::new(field);
        self.cache.lock().map_err(|_| Error::Numeric("poisoned cache".into()))?.insert(key, field.clone());
        Ok(field)
    }

    fn fd_xi<F: Fn(Point) -> Result<f64>>(&self, xi: Point, f: F) -> Result<[f64; 2]> {
        let step = 2.0 * self.op.mesh.h;
        if xi[0].hypot(xi[1]) >= 1.0 - 1e-12 {
            let th = xi[1].atan2(xi[0]);
            let d = (f([(th + step).cos(), (th + step).sin()])? - f([(th - step).cos(), (th - step).sin()])?) / (2.0 * step);
            let t = tangent(xi);
            return Ok([d * t[0], d * t[1]]);
        }
        let mut g = [0.0; 2];
        for (k, gk) in g.iter_mut().enumerate() {
            let (mut a, mut b) = (xi, xi);
            a[k] += step;
            b[k] -= step;
            *gk = (f(a)? - f(b)?) / (2.0 * step);
        }
        Ok(g)
    }
}

impl GreenProvider for FemGreen<'_> {
    fn model(&self) -> &SurfaceModel {
        &self.op.model
    }

    fn g(&self, x: Point, xi: Point) -> Result<f64> {
        self.field(xi)?.value(self.op, x)
    }

    fn grad_xi(&self, x: Point, xi: Point) -> Result<[f64; 2]> {
        self.fd_xi(xi, |p| self.g(x, p))
    }

    fn h(&self, x: Point, xi: Point) -> Result<f64> {
        let f = self.field(xi)?;
        if x[0] == f.xi[0] && x[1] == f.xi[1] {
            f.robin_value(self.op)
        } else {
            f.regular(self.op, x)
        }
    }

    fn robin(&self, xi: Point) -> Result<f64> {
        self.field(xi)?.robin_value(self.op)
    }

    fn robin_grad(&self, xi: Point) -> Result<[f64; 2]> {
        self.fd_xi(xi, |p| self.robin(p))
    }
}

/// Directory of cached smooth parts keyed by model, mesh and source.
///
/// Each file is plain text: a header line
/// `mflab-green 1 <model hash> <mesh hash> <ξ₁> <ξ₂> <n>` followed by `n`
/// nodal values of the smooth part `G + (4/ϱ) ln|x − ξ|`, one per line.
#[derive(Clone, Debug)]
pub struct GreenCache {
    pub dir: PathBuf,
}

impl GreenCache {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(GreenCache { dir: dir.to_path_buf() })
    }

    fn path(&self, op: &DiscreteOperator, xi: Point) -> PathBuf {
        self.dir.join(format!(
            "green-{:016x}-{:016x}-{:016x}-{:016x}.txt",
            op.model.fingerprint(),
            op.mesh.fingerprint(),
            xi[0].to_bits(),
            xi[1].to_bits()
        ))
    }

    pub fn save(&self, op: &DiscreteOperator, xi: Point, h: &[f64]) -> Result<()> {
        let mut s = String::with_capacity(24 * h.len() + 128);
        let _ = writeln!(
            s,
            "mflab-green 1 {:016x} {:016x} {:e} {:e} {}",
            op.model.fingerprint(),
            op.mesh.fingerprint(),
            xi[0],
            xi[1],
            h.len()
        );
        for v in h {
            let _ = writeln!(s, "{v:e}");
        }
        std::fs::write(self.path(op, xi), s)?;
        Ok(())
    }

    /// Cached values, or `None` when absent or stale.
    pub fn load(&self, op: &DiscreteOperator, xi: Point) -> Result<Option<Vec<f64>>> {
        let path = self.path(op, xi);
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
        let n: usize = header.get(6).and_then(|t| t.parse().ok()).unwrap_or(usize::MAX);
        if header.first() != Some(&"mflab-green") || n != op.n() {
            return Ok(None);
        }
        let mut h = Vec::with_capacity(n);
        for (k, l) in lines.enumerate() {
            let v: f64 = l.trim().parse().map_err(|_| Error::Parse { line: k + 2, col: 1, message: "bad value".into() })?;
            h.push(v);
        }
        Ok(if h.len() == n { Some(h) } else { None })
    }
}
