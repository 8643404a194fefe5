//! Blow-up centres: `p` interior and `q` boundary regular points followed by
//! the singular points of `Q₁`.

use crate::green::GreenProvider;
use crate::singular_config::{build_hq, build_k, IndexTriple, KField, SingularSet};
use crate::surface::{Location, SurfaceModel};
use crate::{Error, Point, Result};

/// One blow-up centre.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Center {
    pub point: Point,
    pub gamma: f64,
    pub location: Location,
    /// Index into `Q` for singular centres.
    pub singular: Option<usize>,
}

impl Center {
    /// `1 + γ`.
    pub fn a(&self) -> f64 {
        1.0 + self.gamma
    }

    pub fn varrho(&self) -> f64 {
        self.location.varrho()
    }

    /// `(1+γ)ϱ`.
    pub fn mass(&self) -> f64 {
        self.a() * self.varrho()
    }
}

/// A validated `(p, q, Q₁, ξ⁰)` with its singular data.
pub struct BlowupConfig<'a> {
    pub k: KField<'a>,
    pub p: usize,
    pub q: usize,
    /// Indices of `Q₁` in the singular set.
    pub q1: Vec<usize>,
    /// Regular centres, interior first.
    pub regular: Vec<Point>,
    /// Separation radius.
    pub r0: f64,
    /// Radius of the neighbourhood probed by the stability check.
    pub sigma: f64,
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl<'a> BlowupConfig<'a> {
    /// Validates a configuration.
    ///
    /// Regular centres are listed interior first; boundary centres are snapped
    /// onto the circle. Centres must be `8r₀` apart, regular centres must keep
    /// `8r₀` from `Q`, and interior centres keep `2r₀` from the boundary.
    pub fn new(set: &'a SingularSet, green: &'a dyn GreenProvider, regular: &[Point], q1: &[usize], r0: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0 < 0.25) {
            return Err(Error::Parameter(format!("separation radius r₀ = {r0} must lie in (0, 1/4)")));
        }
        let model = &set.model;
        let mut pts = Vec::with_capacity(regular.len());
        let mut p = 0;
        let mut seen_boundary = false;
        for (k, &x) in regular.iter().enumerate() {
            match model.locate(x)? {
                Location::Interior => {
                    if seen_boundary {
                        return Err(Error::Validation(format!("regular centre {k}: interior centres must precede boundary ones")));
                    }
                    if 1.0 - x[0].hypot(x[1]) < 2.0 * r0 {
                        return Err(Error::Validation(format!("regular centre {k} is closer than 2r₀ to the boundary")));
                    }
                    p += 1;
                    pts.push(x);
                }
                Location::Boundary => {
                    seen_boundary = true;
                    let r = x[0].hypot(x[1]);
                    pts.push([x[0] / r, x[1] / r]);
                }
            }
        }
        let q = pts.len() - p;
        let mut q1v: Vec<usize> = q1.to_vec();
        q1v.sort_unstable();
        q1v.dedup();
        if q1v.len() != q1.len() || q1v.iter().any(|&i| i >= set.len()) {
            return Err(Error::Validation("Q₁ must list distinct indices of Q".into()));
        }
        let k = build_k(build_hq(set, green)?);
        let cfg = BlowupConfig { k, p, q, q1: q1.to_vec(), regular: pts, r0, sigma: 4.0 * r0 };
        cfg.check_separation()?;
        Ok(cfg)
    }

    /// Same `(p, q, Q₁)` with new regular centres.
    pub fn with_regular(&self, regular: &[Point]) -> Result<BlowupConfig<'a>> {
        let mut cfg = BlowupConfig::new(self.set(), self.green(), regular, &self.q1, self.r0)?;
        if cfg.p != self.p || cfg.q != self.q {
            return Err(Error::Validation("moved centres changed (p, q)".into()));
        }
        cfg.sigma = self.sigma;
        Ok(cfg)
    }

    fn check_separation(&self) -> Result<()> {
        let centers = self.centers();
        for i in 0..centers.len() {
            for j in 0..i {
                if dist(centers[i].point, centers[j].point) < 8.0 * self.r0 {
                    return Err(Error::Validation(format!("centres {j} and {i} are closer than 8r₀")));
                }
            }
        }
        for (k, x) in self.regular.iter().enumerate() {
            if self.set().points.iter().any(|s| dist(s.point, *x) < 8.0 * self.r0) {
                return Err(Error::Validation(format!("regular centre {k} is closer than 8r₀ to Q")));
            }
        }
        Ok(())
    }

    pub fn set(&self) -> &'a SingularSet {
        self.k.hq.set()
    }

    pub fn green(&self) -> &'a dyn GreenProvider {
        self.k.hq.green()
    }

    pub fn model(&self) -> &'a SurfaceModel {
        &self.set().model
    }

    /// `ξ = (ξ⁰, Q₁)`.
    pub fn centers(&self) -> Vec<Center> {
        let mut out: Vec<Center> = self
            .regular
            .iter()
            .enumerate()
            .map(|(k, &x)| Center {
                point: x,
                gamma: 0.0,
                location: if k < self.p { Location::Interior } else { Location::Boundary },
                singular: None,
            })
            .collect();
        for &i in &self.q1 {
            let s = self.set().points[i];
            out.push(Center { point: s.point, gamma: s.gamma, location: s.location, singular: Some(i) });
        }
        out
    }

    /// `ρ* = Σ (1+γ_i)ϱ_i`.
    pub fn rho_star(&self) -> f64 {
        self.centers().iter().map(Center::mass).sum()
    }

    /// `max{0, γ*}` over all centres.
    pub fn gamma_star_plus(&self) -> f64 {
        self.centers().iter().map(|c| c.gamma).fold(0.0, f64::max)
    }

    /// `(p, q, Q₁)`.
    pub fn triple(&self) -> IndexTriple {
        IndexTriple { p: self.p, q: self.q, q1: self.q1.clone() }
    }

    /// Whether the existence theory covers the configuration: pure singular,
    /// or `γ* < 1`.
    pub fn in_proven_range(&self) -> bool {
        self.p + self.q == 0 || self.centers().iter().all(|c| c.gamma < 1.0)
    }

    /// Free coordinates of `ξ⁰`: two per interior centre, the polar angle per
    /// boundary centre.
    pub fn coords(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.p + self.q);
        for (k, x) in self.regular.iter().enumerate() {
            if k < self.p {
                out.extend_from_slice(x);
            } else {
                out.push(x[1].atan2(x[0]));
            }
        }
        out
    }

    /// Regular centres from free coordinates.
    pub fn points_from(&self, c: &[f64]) -> Result<Vec<Point>> {
        if c.len() != 2 * self.p + self.q {
            return Err(Error::Parameter(format!("expected {} coordinates, got {}", 2 * self.p + self.q, c.len())));
        }
        let mut out = Vec::with_capacity(self.p + self.q);
        for k in 0..self.p {
            out.push([c[2 * k], c[2 * k + 1]]);
        }
        for &t in &c[2 * self.p..] {
            out.push([t.cos(), t.sin()]);
        }
        Ok(out)
    }

    /// Configuration at free coordinates `c`.
    pub fn at(&self, c: &[f64]) -> Result<BlowupConfig<'a>> {
        self.with_regular(&self.points_from(c)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::green::disk_oracle;
    use std::f64::consts::PI;

    #[test]
    fn validation_and_coordinates() {
        let m = SurfaceModel::flat_disk();
        let g = disk_oracle(&m).unwrap();
        let set = SingularSet::new(&m, &[([0.5, 0.0], 0.5)], Expr::constant(1.0)).unwrap();
        let cfg = BlowupConfig::new(&set, &g, &[[-0.3, 0.1], [0.0, 1.0]], &[0], 0.05).unwrap();
        assert_eq!((cfg.p, cfg.q), (1, 1));
        assert!((cfg.rho_star() - (8.0 * PI + 4.0 * PI + 12.0 * PI)).abs() < 1e-12);
        let c = cfg.coords();
        assert_eq!(c.len(), 3);
        let back = cfg.at(&c).unwrap();
        assert!(dist(back.regular[1], [0.0, 1.0]) < 1e-15);
        assert!(BlowupConfig::new(&set, &g, &[[0.0, 1.0], [-0.3, 0.1]], &[0], 0.05).is_err());
        assert!(BlowupConfig::new(&set, &g, &[[0.45, 0.0]], &[0], 0.05).is_err());
        assert!(BlowupConfig::new(&set, &g, &[[0.0, 0.95]], &[], 0.05).is_err());
        assert!(BlowupConfig::new(&set, &g, &[], &[0, 0], 0.05).is_err());
        assert!(cfg.in_proven_range());
    }
}
