//! Scaling functions `d_i` and the reduced functional `F` with its gradient.

use super::config::{BlowupConfig, Center};
use super::critical::Objective;
use crate::green::tangent;
use crate::surface::Location;
use crate::{Error, Point, Result};

/// `ln K_i(ξ_i)` of a centre.
fn ln_k_center(cfg: &BlowupConfig<'_>, c: &Center) -> Result<f64> {
    let k = cfg.k.local(c.point, c.gamma)?.at_center()?;
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Data(format!("K_i(ξ_i) = {k} is not positive at ({}, {})", c.point[0], c.point[1])));
    }
    Ok(k.ln())
}

/// `d_i = (1/8(1+γ_i)²) exp[(1+γ_i)ϱ_i R(ξ_i) + Σ_{j≠i}(1+γ_j)ϱ_j G(ξ_i,ξ_j) + ln K_i(ξ_i)]`.
pub fn scaling_d(cfg: &BlowupConfig<'_>, i: usize) -> Result<f64> {
    let centers = cfg.centers();
    let c = centers
        .get(i)
        .ok_or_else(|| Error::Parameter(format!("centre {i} out of range ({} centres)", centers.len())))?;
    let green = cfg.green();
    let mut e = c.mass() * green.robin(c.point)? + ln_k_center(cfg, c)?;
    for (j, o) in centers.iter().enumerate() {
        if j != i {
            e += o.mass() * green.g(c.point, o.point)?;
        }
    }
    Ok(e.exp() / (8.0 * c.a() * c.a()))
}

/// `F = Σ 2(1+γ_i)ϱ_i ln K_i(ξ_i) + Σ (1+γ_i)²ϱ_i² R(ξ_i) + Σ_{i≠j} (1+γ_i)(1+γ_j)ϱ_iϱ_j G(ξ_i,ξ_j)`.
pub fn reduced_f(cfg: &BlowupConfig<'_>) -> Result<f64> {
    let centers = cfg.centers();
    let green = cfg.green();
    let mut f = 0.0;
    for (i, c) in centers.iter().enumerate() {
        let m = c.mass();
        f += 2.0 * m * ln_k_center(cfg, c)? + m * m * green.robin(c.point)?;
        for o in &centers[..i] {
            f += 2.0 * m * o.mass() * green.g(c.point, o.point)?;
        }
    }
    Ok(f)
}

/// `∇ ln K` at a regular point: `∇V/V − Σ_Q (ϱγ/2) ∇_x G(x, q)`.
fn grad_ln_k(cfg: &BlowupConfig<'_>, x: Point) -> Result<[f64; 2]> {
    let set = cfg.set();
    let v = set.v.eval_grad(x);
    let mut g = [v.d[0] / v.v, v.d[1] / v.v];
    for s in &set.points {
        // G is symmetric, so ∇_x G(x, q) = ∇_ξ G(q, ξ) at ξ = x.
        let d = cfg.green().grad_xi(s.point, x)?;
        let c = 0.5 * s.varrho() * s.gamma;
        g[0] -= c * d[0];
        g[1] -= c * d[1];
    }
    Ok(g)
}

/// Gradient of `F` in the free coordinates of [`BlowupConfig::coords`].
pub fn grad_f(cfg: &BlowupConfig<'_>) -> Result<Vec<f64>> {
    let centers = cfg.centers();
    let green = cfg.green();
    let mut out = Vec::with_capacity(2 * cfg.p + cfg.q);
    for (i, c) in centers.iter().enumerate().take(cfg.p + cfg.q) {
        let m = c.mass();
        let lk = grad_ln_k(cfg, c.point)?;
        let rg = green.robin_grad(c.point)?;
        let mut g = [2.0 * m * lk[0] + m * m * rg[0], 2.0 * m * lk[1] + m * m * rg[1]];
        for (j, o) in centers.iter().enumerate() {
            if j != i {
                let d = green.grad_xi(o.point, c.point)?;
                g[0] += 2.0 * m * o.mass() * d[0];
                g[1] += 2.0 * m * o.mass() * d[1];
            }
        }
        match c.location {
            Location::Interior => out.extend_from_slice(&g),
            Location::Boundary => {
                let t = tangent(c.point);
                out.push(g[0] * t[0] + g[1] * t[1]);
            }
        }
    }
    Ok(out)
}

/// Central finite differences of `F` in the free coordinates.
pub fn grad_f_fd(cfg: &BlowupConfig<'_>, h: f64) -> Result<Vec<f64>> {
    let c = cfg.coords();
    let mut out = Vec::with_capacity(c.len());
    for k in 0..c.len() {
        let mut cp = c.clone();
        let mut cm = c.clone();
        cp[k] += h;
        cm[k] -= h;
        out.push((reduced_f(&cfg.at(&cp)?)? - reduced_f(&cfg.at(&cm)?)?) / (2.0 * h));
    }
    Ok(out)
}

/// `F` as an [`Objective`] over the free coordinates of a template.
pub struct ReducedObjective<'c, 'a> {
    pub template: &'c BlowupConfig<'a>,
}

impl Objective for ReducedObjective<'_, '_> {
    fn dim(&self) -> usize {
        2 * self.template.p + self.template.q
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        reduced_f(&self.template.at(x)?)
    }

    fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        grad_f(&self.template.at(x)?)
    }

    fn admissible(&self, x: &[f64]) -> bool {
        self.template.at(x).is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::green::{disk_oracle, GreenProvider};
    use crate::singular_config::SingularSet;
    use crate::surface::SurfaceModel;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn disk() -> (SurfaceModel, crate::green::DiskGreen) {
        let m = SurfaceModel::flat_disk();
        let g = disk_oracle(&m).unwrap();
        (m, g)
    }

    #[test]
    fn single_centre_values() {
        let (m, g) = disk();
        let set = SingularSet::empty(&m, Expr::constant(1.0)).unwrap();
        let cfg = BlowupConfig::new(&set, &g, &[[0.0, 0.0]], &[], 0.05).unwrap();
        assert!((scaling_d(&cfg, 0).unwrap() - (-3f64).exp() / 8.0).abs() < 1e-14);
        assert!((reduced_f(&cfg).unwrap() + 24.0 * PI).abs() < 1e-10);
        let g0 = grad_f(&cfg).unwrap();
        assert!(g0.iter().all(|v| v.abs() < 1e-12));
        // Scaling K scales d.
        let set2 = SingularSet::empty(&m, Expr::constant(3.0)).unwrap();
        let cfg2 = BlowupConfig::new(&set2, &g, &[[0.0, 0.0]], &[], 0.05).unwrap();
        assert!((scaling_d(&cfg2, 0).unwrap() / scaling_d(&cfg, 0).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn removing_a_centre() {
        let (m, g) = disk();
        let set = SingularSet::empty(&m, Expr::constant(1.0)).unwrap();
        let two = BlowupConfig::new(&set, &g, &[[-0.4, 0.0], [0.4, 0.1]], &[], 0.05).unwrap();
        let one = BlowupConfig::new(&set, &g, &[[-0.4, 0.0]], &[], 0.05).unwrap();
        let diff = scaling_d(&two, 0).unwrap().ln() - scaling_d(&one, 0).unwrap().ln();
        let expect = 8.0 * PI * g.g([-0.4, 0.0], [0.4, 0.1]).unwrap();
        assert!((diff - expect).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn rotation_invariance(r in 0.0f64..0.8, t in 0.0f64..6.28) {
            let (m, g) = disk();
            let set = SingularSet::empty(&m, Expr::constant(1.0)).unwrap();
            let a = BlowupConfig::new(&set, &g, &[[r, 0.0]], &[], 0.05).unwrap();
            let b = BlowupConfig::new(&set, &g, &[[r * t.cos(), r * t.sin()]], &[], 0.05).unwrap();
            prop_assert!((reduced_f(&a).unwrap() - reduced_f(&b).unwrap()).abs() < 1e-6);
        }

        #[test]
        fn constant_k_shifts_f(c in 0.1f64..10.0, x in -0.5f64..0.5, y in -0.5f64..0.5) {
            let (m, g) = disk();
            let s1 = SingularSet::new(&m, &[([0.0, 1.0], 0.5)], Expr::constant(1.0)).unwrap();
            let sc = SingularSet::new(&m, &[([0.0, 1.0], 0.5)], Expr::constant(c)).unwrap();
            let a = BlowupConfig::new(&s1, &g, &[[x, y]], &[0], 0.05).unwrap();
            let b = BlowupConfig::new(&sc, &g, &[[x, y]], &[0], 0.05).unwrap();
            let shift = reduced_f(&b).unwrap() - reduced_f(&a).unwrap();
            prop_assert!((shift - 2.0 * a.rho_star() * c.ln()).abs() < 1e-9);
            let (ga, gb) = (grad_f(&a).unwrap(), grad_f(&b).unwrap());
            for k in 0..2 {
                prop_assert!((ga[k] - gb[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gradient_against_differences() {
        let (m, g) = disk();
        let v = Expr::parse("1 + 0.3*x + 0.2*x*y").unwrap();
        let set = SingularSet::new(&m, &[([0.1, -0.5], 0.5), ([-1.0, 0.0], -0.4)], v).unwrap();
        let cfg = BlowupConfig::new(&set, &g, &[[0.3, 0.4], [-0.4, 0.35], [0.6, -0.8]], &[0], 0.03).unwrap();
        let a = grad_f(&cfg).unwrap();
        let b = grad_f_fd(&cfg, 1e-5).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-4 * x.abs().max(1.0), "{a:?} {b:?}");
        }
    }
}
