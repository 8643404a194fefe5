//! Critical points of finite-dimensional functions and the perturbation probe
//! used as the operational test of C¹-stability.

use crate::tolerances::{ETA_PERT, N_PERT, TOL_GRAD};
use crate::{Error, Result};
use faer::prelude::Solve;
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A `C¹` function on an admissible open set of `ℝⁿ`.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn grad(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn admissible(&self, x: &[f64]) -> bool;
}

/// `f + η s (c·x + ½ xᵀBx)`: a `C¹`-small perturbation with symmetric `B`.
struct Perturbed<'o> {
    base: &'o dyn Objective,
    scale: f64,
    linear: Vec<f64>,
    quadratic: Vec<f64>,
}

impl Perturbed<'_> {
    fn bx(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n).map(|i| (0..n).map(|j| self.quadratic[i * n + j] * x[j]).sum()).collect()
    }
}

impl Objective for Perturbed<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let bx = self.bx(x);
        let p: f64 = x.iter().zip(&self.linear).map(|(a, c)| a * c).sum::<f64>()
            + 0.5 * x.iter().zip(&bx).map(|(a, b)| a * b).sum::<f64>();
        Ok(self.base.value(x)? + self.scale * p)
    }

    fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let bx = self.bx(x);
        let mut g = self.base.grad(x)?;
        for i in 0..g.len() {
            g[i] += self.scale * (self.linear[i] + bx[i]);
        }
        Ok(g)
    }

    fn admissible(&self, x: &[f64]) -> bool {
        self.base.admissible(x)
    }
}

/// How a search ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchStatus {
    Converged,
    /// The iteration could not stay inside the admissible set.
    BoundaryEscape,
    MaxIterations,
}

/// Outcome of the perturbation probe.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    /// Distance of each perturbed critical point from the unperturbed one;
    /// infinite when the perturbed search failed.
    pub displacements: Vec<f64>,
    pub sigma: f64,
    pub eta: f64,
}

impl StabilityReport {
    /// Every perturbed search converged inside the `σ`-ball.
    pub fn stable(&self) -> bool {
        self.displacements.iter().all(|d| *d < self.sigma)
    }
}

/// Result of [`find_critical`].
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalReport {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub status: SearchStatus,
    pub stability: Option<StabilityReport>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Symmetrized central-difference Hessian of the gradient.
fn hessian(f: &dyn Objective, x: &[f64], h: f64) -> Result<Mat<f64>> {
    let n = x.len();
    let mut hm = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let (gp, gm) = (f.grad(&xp)?, f.grad(&xm)?);
        for i in 0..n {
            hm[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    Ok(Mat::from_fn(n, n, |i, j| 0.5 * (hm[(i, j)] + hm[(j, i)])))
}

fn newton_direction(hm: &Mat<f64>, g: &[f64]) -> Option<Vec<f64>> {
    let n = g.len();
    let rhs = Mat::from_fn(n, 1, |i, _| -g[i]);
    let sol = hm.partial_piv_lu().solve(&rhs);
    let d: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
    d.iter().all(|v| v.is_finite()).then_some(d)
}

/// Damped Newton on `∇f = 0` with a finite-difference Hessian.
///
/// Steps are accepted when `|∇f|` decreases; otherwise the search falls back
/// to descent on `½|∇f|²` along `−H∇f`.
fn search(f: &dyn Objective, start: &[f64], max_iter: usize) -> Result<CriticalReport> {
    if start.len() != f.dim() {
        return Err(Error::Parameter(format!("start has {} coordinates, expected {}", start.len(), f.dim())));
    }
    if !f.admissible(start) {
        return Err(Error::Validation("start is outside the admissible set".into()));
    }
    let mut x = start.to_vec();
    let mut g = f.grad(&x)?;
    let mut gn = norm(&g);
    let mut status = SearchStatus::MaxIterations;
    let mut it = 0;
    while it < max_iter {
        if gn <= TOL_GRAD {
            status = SearchStatus::Converged;
            break;
        }
        it += 1;
        let hm = hessian(f, &x, 1e-5)?;
        let n = x.len();
        let hg: Vec<f64> = (0..n).map(|i| -(0..n).map(|j| hm[(i, j)] * g[j]).sum::<f64>()).collect();
        let mut accepted = false;
        let mut escaped = true;
        for d in newton_direction(&hm, &g).into_iter().chain(std::iter::once(hg)) {
            let mut t = 1.0;
            for _ in 0..40 {
                let xt: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
                if f.admissible(&xt) {
                    escaped = false;
                    let gt = f.grad(&xt)?;
                    let nt = norm(&gt);
                    if nt < gn {
                        x = xt;
                        g = gt;
                        gn = nt;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if accepted {
                break;
            }
        }
        if !accepted {
            status = if escaped { SearchStatus::BoundaryEscape } else { SearchStatus::MaxIterations };
            break;
        }
    }
    if gn <= TOL_GRAD {
        status = SearchStatus::Converged;
    }
    Ok(CriticalReport { value: f.value(&x)?, x, grad_norm: gn, iterations: it, status, stability: None })
}

/// Searches a critical point from `start` and probes its stability with
/// `N_PERT` random perturbations of relative size `η` inside a `σ`-ball.
pub fn find_critical(f: &dyn Objective, start: &[f64], sigma: f64, seed: u64) -> Result<CriticalReport> {
    let mut report = search(f, start, 60)?;
    if report.status != SearchStatus::Converged {
        return Ok(report);
    }
    let n = f.dim();
    let scale = ETA_PERT * (1.0 + report.value.abs());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut displacements = Vec::with_capacity(N_PERT);
    for _ in 0..N_PERT {
        let linear: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut quadratic = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = rng.gen_range(-1.0..1.0);
                quadratic[i * n + j] = v;
                quadratic[j * n + i] = v;
            }
        }
        let p = Perturbed { base: f, scale, linear, quadratic };
        let d = match search(&p, &report.x, 60) {
            Ok(r) if r.status == SearchStatus::Converged => norm(&r.x.iter().zip(&report.x).map(|(a, b)| a - b).collect::<Vec<_>>()),
            _ => f64::INFINITY,
        };
        displacements.push(d);
    }
    report.stability = Some(StabilityReport { displacements, sigma, eta: ETA_PERT });
    Ok(report)
}
