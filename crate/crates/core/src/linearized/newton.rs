//! Damped Newton for `−Δu = ε²Ke^u − mean`, `∂_ν u = 0`, `∫u = 0`, started at `u = W`.
//!
//! The unknown is `φ = u − W` at the mesh vertices; `−ΔW` enters through the
//! bubble loads. With a kernel space the iteration solves
//! `𝓛`-type systems on `K_ξ^⊥` and returns the multipliers `c_j` of
//! `Σ c_j(−ΔPZ_j)`.

use super::operator::{KernelSpace, LinearizedOperator};
use super::saddle::Saddle;
use crate::elliptic::merge_triplets;
use crate::surface::Field;
use crate::tolerances::{NEWTON_MAX_BACKTRACK, NEWTON_MAX_ITER, NEWTON_TOL};
use crate::{Error, Point, Result};

/// Sufficient decrease constant of the Armijo test.
const ARMIJO: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    /// Target for `‖r‖_∞`.
    pub tol: f64,
    pub max_iter: usize,
    pub max_backtrack: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: NEWTON_TOL, max_iter: NEWTON_MAX_ITER, max_backtrack: NEWTON_MAX_BACKTRACK }
    }
}

/// One Newton iterate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonTrace {
    pub iter: usize,
    pub residual: f64,
    pub damping: f64,
    pub phi_norm: f64,
}

/// The corrected solution `u = W + φ`.
#[derive(Clone, Debug)]
pub struct Corrected {
    /// `φ` at the mesh vertices.
    pub phi: Vec<f64>,
    /// `u = W + φ` at the mesh vertices.
    pub u: Field,
    /// `(∫|∇φ|²)^{1/2}`.
    pub phi_norm: f64,
    /// Kernel multipliers, empty without projection.
    pub c: Vec<f64>,
    pub iterations: usize,
    /// `ε²∫Ke^u`.
    pub mass: f64,
    /// `E_ε(u) = ½∫|∇u|² − ε²∫Ke^u`.
    pub energy: f64,
    pub trace: Vec<NewtonTrace>,
}

/// Summary of a run, for reports.
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonReport {
    pub eps: f64,
    pub iterations: usize,
    pub residual: f64,
    pub phi_norm: f64,
    pub mass: f64,
    pub mass_target: f64,
    pub energy: f64,
    pub c_norm: f64,
}

impl Corrected {
    pub fn report(&self, lin: &LinearizedOperator<'_, '_, '_>) -> NewtonReport {
        NewtonReport {
            eps: lin.state.eps,
            iterations: self.iterations,
            residual: self.trace.last().map_or(f64::NAN, |t| t.residual),
            phi_norm: self.phi_norm,
            mass: self.mass,
            mass_target: lin.state.cfg.rho_star(),
            energy: self.energy,
            c_norm: self.c.iter().fold(0.0, |a, v| a + v.abs()),
        }
    }
}

struct Problem<'l, 's, 'c, 'a> {
    lin: &'l LinearizedOperator<'s, 'c, 'a>,
    /// Bubble loads tested against the hat functions.
    f: Vec<f64>,
    /// Mean-free kernel loads `b_j`.
    b: Vec<&'l [f64]>,
}

impl Problem<'_, '_, '_, '_> {
    fn exp_values(&self, phi: &[f64]) -> Vec<f64> {
        let pq = self.lin.op.at_points(phi);
        self.lin.ln_ke.iter().zip(&pq).map(|(l, p)| (l + p).exp()).collect()
    }

    /// `r = Kφ − P(N − F) − Bc`.
    fn residual(&self, phi: &[f64], c: &[f64]) -> Vec<f64> {
        let op = self.lin.op;
        let n = op.load_values(&self.exp_values(phi));
        let mut g: Vec<f64> = n.iter().zip(&self.f).map(|(a, b)| a - b).collect();
        self.lin.remove_mean(&mut g);
        let mut r = op.apply(phi);
        for ((ri, gi), k) in r.iter_mut().zip(&g).zip(0..) {
            *ri -= gi + self.b.iter().zip(c).map(|(b, cj)| b[k] * cj).sum::<f64>();
        }
        r
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Corrects `W` to a discrete solution; with `kernel`, on `K_ξ^⊥` up to `Σ c_j(−ΔPZ_j)`.
pub fn newton_correct(
    lin: &LinearizedOperator<'_, '_, '_>,
    kernel: Option<&KernelSpace<'_>>,
    opts: NewtonOptions,
) -> Result<Corrected> {
    let op = lin.op;
    let n = op.n();
    let prob = Problem {
        lin,
        f: op.load_values(&lin.loads),
        b: kernel.map_or_else(Vec::new, |k| k.loads.iter().map(Vec::as_slice).collect()),
    };
    let k = prob.b.len();
    let mut phi = vec![0.0; n];
    let mut c = vec![0.0; k];
    let mut r = prob.residual(&phi, &c);
    let mut history = vec![norm_inf(&r)];
    let mut trace = vec![NewtonTrace { iter: 0, residual: history[0], damping: 0.0, phi_norm: 0.0 }];
    let mut iter = 0;
    while norm_inf(&r) > opts.tol {
        if iter == opts.max_iter {
            return Err(Error::Divergence {
                message: format!("no convergence in {} iterations, ‖r‖_∞ = {:.3e}", opts.max_iter, norm_inf(&r)),
                history,
            });
        }
        iter += 1;
        let e = prob.exp_values(&phi);
        let mut a = op.stiffness.clone();
        a.extend(op.weighted_mass_values(&e).into_iter().map(|(i, j, v)| (i, j, -v)));
        let mut cols: Vec<&[f64]> = prob.b.clone();
        cols.push(&op.lumped);
        let saddle = Saddle::new(n, &merge_triplets(a), &cols)?;
        let mut rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        for col in &cols {
            rhs.push(-col.iter().zip(&phi).map(|(a, b)| a * b).sum::<f64>());
        }
        let sol = saddle.solve(&rhs)?;
        let (dphi, dc) = (&sol[..n], &sol[n..n + k]);
        let r0 = norm2(&r);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtrack {
            let trial: Vec<f64> = phi.iter().zip(dphi).map(|(p, d)| p + t * d).collect();
            // The system carries −δc in the kernel block.
            let ct: Vec<f64> = c.iter().zip(dc).map(|(a, d)| a - t * d).collect();
            let rt = prob.residual(&trial, &ct);
            if rt.iter().all(|v| v.is_finite()) && norm2(&rt) <= (1.0 - ARMIJO * t) * r0 {
                accepted = Some((trial, ct, rt));
                break;
            }
            t *= 0.5;
        }
        let Some((p, cn, rn)) = accepted else {
            return Err(Error::Divergence {
                message: format!("line search failed at iteration {iter}, ‖r‖_∞ = {:.3e}", norm_inf(&r)),
                history,
            });
        };
        phi = p;
        c = cn;
        r = rn;
        history.push(norm_inf(&r));
        trace.push(NewtonTrace { iter, residual: norm_inf(&r), damping: t, phi_norm: lin.h1_norm(&phi) });
    }
    finish(lin, &prob, phi, c, iter, trace)
}

fn finish(
    lin: &LinearizedOperator<'_, '_, '_>,
    prob: &Problem<'_, '_, '_, '_>,
    phi: Vec<f64>,
    c: Vec<f64>,
    iterations: usize,
    trace: Vec<NewtonTrace>,
) -> Result<Corrected> {
    let op = lin.op;
    let st = lin.state;
    // The mesh carries only the change e^{W+φ} − e^W; the ansatz rule carries e^W.
    let pq = op.at_points(&phi);
    let extra: f64 = op.quad.points.iter().zip(&lin.ln_ke).zip(&pq).map(|((q, l), p)| q.w * l.exp() * p.exp_m1()).sum();
    let mass = st.total_mass()? + extra;
    let kphi = op.energy(&phi, &phi);
    let fphi: f64 = prob.f.iter().zip(&phi).map(|(a, b)| a * b).sum();
    let energy = 0.5 * st.dirichlet()? + fphi + 0.5 * kphi - mass;
    let u = op
        .mesh
        .vertices
        .iter()
        .zip(&phi)
        .map(|(&x, p)| Ok(st.w(x)? + p))
        .collect::<Result<Vec<_>>>()?;
    Ok(Corrected { phi, u: Field::new(u), phi_norm: kphi.max(0.0).sqrt(), c, iterations, mass, energy, trace })
}

impl Corrected {
    /// `u(x) = W(x) + φ(x)`.
    pub fn u_at(&self, lin: &LinearizedOperator<'_, '_, '_>, x: Point) -> Result<f64> {
        Ok(lin.state.w(x)? + lin.state.bubbles[0].ws.interpolate(&self.phi, x)?)
    }
}
