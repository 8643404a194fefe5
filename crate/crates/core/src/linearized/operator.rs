//! `𝓛φ = −Δφ − Σ χ_i|y_i|^{2γ_i}e^{−φ_i}e^{δ_i} φ + mean`, the full Jacobian
//! variant with weight `ε²Ke^W`, the translation kernel `K_ξ` and the
//! bottom of the spectrum of `𝓛` on `K_ξ^⊥`.

use super::saddle::Saddle;
use crate::bubbles::{dirichlet, project_z, KernelElement};
use crate::elliptic::{merge_triplets, DiscreteOperator};
use crate::reduction::{AnsatzState, BlowupConfig, functional::scaling_d};
use crate::reduction::ansatz::lambda_of;
use crate::surface::{mesh_model, Mark};
use crate::{Error, Result};
use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Core radius of the mesh rosettes, in units of the bubble scale `1/λ`.
const CORE_SCALE: f64 = 0.5;

/// Mesh graded at every centre down to a fraction of `1/λ_i(ε)`.
pub fn newton_operator(cfg: &BlowupConfig<'_>, eps: f64, h: f64) -> Result<DiscreteOperator> {
    let marks = cfg
        .centers()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let l = lambda_of(c.gamma, scaling_d(cfg, i)?, eps);
            Ok(Mark::new(c.point, 1.0).with_core(CORE_SCALE / l).with_weight(2.0 * c.gamma))
        })
        .collect::<Result<Vec<_>>>()?;
    let model = cfg.model();
    crate::elliptic::assemble(model, mesh_model(model, h, &marks)?)
}

/// Which zeroth-order weight the operator carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// `Σ χ_i|y_i|^{2γ_i}e^{−φ_i}e^{δ_i}`.
    Bubbles,
    /// `ε² K e^W`.
    Full,
}

/// Linearization of the mean field operator at `W` on the state's mesh.
pub struct LinearizedOperator<'s, 'c, 'a> {
    pub state: &'s AnsatzState<'c, 'a>,
    pub op: &'a DiscreteOperator,
    /// `ln(ε²K) + W` at the quadrature points.
    pub ln_ke: Vec<f64>,
    /// Bubble loads at the quadrature points.
    pub loads: Vec<f64>,
}

impl<'s, 'c, 'a> LinearizedOperator<'s, 'c, 'a> {
    pub fn new(state: &'s AnsatzState<'c, 'a>) -> Result<Self> {
        let op = state.bubbles[0].ws.op;
        let mut ln_ke = Vec::with_capacity(op.quad.points.len());
        let mut loads = Vec::with_capacity(op.quad.points.len());
        for q in &op.quad.points {
            ln_ke.push(state.ln_ke(q.x)?);
            loads.push(state.loads(q.x));
        }
        Ok(LinearizedOperator { state, op, ln_ke, loads })
    }

    pub fn n(&self) -> usize {
        self.op.n()
    }

    /// Zeroth-order weight at the quadrature points.
    pub fn weight(&self, variant: Variant) -> Vec<f64> {
        match variant {
            Variant::Bubbles => self.loads.clone(),
            Variant::Full => self.ln_ke.iter().map(|v| v.exp()).collect(),
        }
    }

    /// Removes the mean of a dual vector: `b − (Σb/|Σ|) m`.
    pub fn remove_mean(&self, b: &mut [f64]) {
        let s: f64 = b.iter().sum::<f64>() / self.op.area();
        for (v, m) in b.iter_mut().zip(&self.op.lumped) {
            *v -= s * m;
        }
    }

    /// `Kφ − P(M_c φ)`, the weak form of `𝓛φ` tested against the hat functions.
    pub fn apply(&self, phi: &[f64], variant: Variant) -> Vec<f64> {
        let w = self.weight(variant);
        let pq = self.op.at_points(phi);
        let wp: Vec<f64> = w.iter().zip(&pq).map(|(a, b)| a * b).collect();
        let mut mphi = self.op.load_values(&wp);
        self.remove_mean(&mut mphi);
        let kphi = self.op.apply(phi);
        kphi.iter().zip(&mphi).map(|(a, b)| a - b).collect()
    }

    /// `‖φ‖ = (∫|∇φ|²)^{1/2}`.
    pub fn h1_norm(&self, phi: &[f64]) -> f64 {
        self.op.energy(phi, phi).max(0.0).sqrt()
    }

    /// `‖g − ḡ‖_s` for values at the quadrature points.
    fn ls_norm_mean_free(&self, g: &[f64], s: f64) -> Result<f64> {
        if !(s > 1.0) {
            return Err(Error::Parameter(format!("norm exponent s = {s} must exceed 1")));
        }
        let pts = &self.op.quad.points;
        let mean = pts.iter().zip(g).map(|(q, v)| q.w * v).sum::<f64>() / self.op.area();
        let acc: f64 = pts.iter().zip(g).map(|(q, v)| q.w * (v - mean).abs().powf(s)).sum();
        Ok(acc.powf(1.0 / s))
    }

    /// `‖(full − 𝓛)φ‖_s / ‖φ‖ = ‖(ε²Ke^W − Σf_i)φ − mean‖_s / ‖φ‖`.
    pub fn s_gap(&self, phi: &[f64], s: f64) -> Result<f64> {
        let pq = self.op.at_points(phi);
        let g: Vec<f64> = (0..pq.len()).map(|k| (self.ln_ke[k].exp() - self.loads[k]) * pq[k]).collect();
        Ok(self.ls_norm_mean_free(&g, s)? / self.h1_norm(phi))
    }

    /// `‖N(φ)‖_s` with `N(φ) = ε²Ke^W(e^φ − 1 − φ) − mean`.
    pub fn nonlinear_norm(&self, phi: &[f64], s: f64) -> Result<f64> {
        let pq = self.op.at_points(phi);
        let g: Vec<f64> = (0..pq.len()).map(|k| self.ln_ke[k].exp() * (pq[k].exp_m1() - pq[k])).collect();
        self.ls_norm_mean_free(&g, s)
    }
}

/// Translation modes `PZ^j_i` of the regular centres.
pub struct KernelSpace<'a> {
    pub elements: Vec<KernelElement<'a>>,
    /// Mean-free loads `∫(−Δ_g PZ) ψ_k`, so that `⟨PZ, φ⟩ = bᵀφ`.
    pub loads: Vec<Vec<f64>>,
    /// `PZ` at the mesh vertices.
    pub nodal: Vec<Vec<f64>>,
    /// `⟨PZ_a, PZ_b⟩` by chart quadrature.
    pub gram: Vec<Vec<f64>>,
}

/// Builds `K_ξ` for a state; empty when `p + q = 0`.
pub fn kernel_space<'a>(lin: &LinearizedOperator<'_, '_, 'a>) -> Result<KernelSpace<'a>> {
    let st = lin.state;
    let mut elements = Vec::new();
    for (i, c) in st.centers.iter().enumerate().take(st.cfg.p + st.cfg.q) {
        let ws = st.bubbles[i].ws;
        for j in 1..=st.bubbles[i].bubble.translations() {
            elements.push(project_z(ws, c.point, 0.0, st.lambda[i], j)?);
        }
    }
    let mut loads = Vec::with_capacity(elements.len());
    let mut nodal = Vec::with_capacity(elements.len());
    for e in &elements {
        let mut b = lin.op.load(|q| e.bubble.source(q.x) * e.z(q.x));
        lin.remove_mean(&mut b);
        loads.push(b);
        nodal.push(lin.op.mesh.vertices.iter().map(|&x| e.value(x)).collect::<Result<Vec<_>>>()?);
    }
    let gram = elements
        .iter()
        .map(|a| elements.iter().map(|b| dirichlet(a, b)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(KernelSpace { elements, loads, nodal, gram })
}

impl KernelSpace<'_> {
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    /// `Πx = x − Z D⁻¹ Bᵀx` with `D = BᵀZ`: the projection onto `{φ : ⟨PZ, φ⟩ = 0}` along `K_ξ`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let k = self.dim();
        if k == 0 {
            return Ok(x.to_vec());
        }
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
        let d = Mat::from_fn(k, k, |i, j| dot(&self.loads[i], &self.nodal[j]));
        let rhs = Mat::from_fn(k, 1, |i, _| dot(&self.loads[i], x));
        use faer::prelude::Solve;
        let c = d.partial_piv_lu().solve(&rhs);
        let mut out = x.to_vec();
        for j in 0..k {
            for (o, z) in out.iter_mut().zip(&self.nodal[j]) {
                *o -= c[(j, 0)] * z;
            }
        }
        Ok(out)
    }

    /// `‖Π²x − Πx‖/‖x‖` on a seeded random field.
    pub fn idempotency_defect(&self, seed: u64) -> Result<f64> {
        let n = self.nodal.first().map_or(0, Vec::len);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p1 = self.project(&x)?;
        let p2 = self.project(&p1)?;
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(p1.iter().zip(&p2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() / nx.max(f64::MIN_POSITIVE))
    }
}

/// Bottom of `|spec|` of `𝓛` on the constrained subspace in the `H¹` metric.
#[derive(Clone, Debug, PartialEq)]
pub struct Coercivity {
    pub sigma_min: f64,
    /// Estimates of `σ_min` per Lanczos step.
    pub log: Vec<f64>,
}

/// Smallest `|μ|` with `(K − M_f)x = μKx` on zero-mean fields, `H¹`-orthogonal to
/// `K_ξ` when `kernel` is given.
///
/// Lanczos in the `K` inner product on `T = (A|_V)⁻¹K`, whose extreme Ritz
/// values are `1/μ` for the `μ` closest to zero.
pub fn coercivity_constant(lin: &LinearizedOperator<'_, '_, '_>, kernel: Option<&KernelSpace<'_>>) -> Result<Coercivity> {
    let n = lin.n();
    let op = lin.op;
    let mut a = op.stiffness.clone();
    for (i, j, v) in op.weighted_mass_values(&lin.loads) {
        a.push((i, j, -v));
    }
    let a = merge_triplets(a);
    let mut cols: Vec<&[f64]> = vec![&op.lumped];
    if let Some(ks) = kernel {
        cols.extend(ks.loads.iter().map(Vec::as_slice));
    }
    let k = cols.len();
    let saddle = Saddle::new(n, &a, &cols)?;
    let apply_t = |x: &[f64]| -> Result<Vec<f64>> {
        let mut rhs = op.apply(x);
        rhs.extend(std::iter::repeat(0.0).take(k));
        let mut y = saddle.solve(&rhs)?;
        y.truncate(n);
        Ok(y)
    };
    let kdot = |x: &[f64], y: &[f64]| op.energy(x, y);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut q = apply_t(&x0)?;
    let nq = kdot(&q, &q).sqrt();
    q.iter_mut().for_each(|v| *v /= nq);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let (mut alpha, mut beta): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    let mut log = Vec::new();
    let mut stable = 0;
    let max_steps = 150.min(n.saturating_sub(k));
    for step in 0..max_steps {
        let qj = basis[step].clone();
        let mut w = apply_t(&qj)?;
        alpha.push(kdot(&w, &qj));
        // Full reorthogonalization, twice.
        for _ in 0..2 {
            for b in &basis {
                let c = kdot(&w, b);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let m = alpha.len();
        let t = Mat::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i == j + 1 {
                beta[j]
            } else if j == i + 1 {
                beta[i]
            } else {
                0.0
            }
        });
        let ev = t
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Spectral { message: format!("tridiagonal eigensolver failed: {e:?}"), log: log.clone() })?;
        let theta = ev.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let sigma = 1.0 / theta;
        if let Some(&prev) = log.last() {
            let prev: f64 = prev;
            stable = if ((sigma - prev) / sigma).abs() < 1e-10 { stable + 1 } else { 0 };
        }
        log.push(sigma);
        let b = kdot(&w, &w).max(0.0).sqrt();
        if stable >= 3 || b < 1e-13 * theta {
            return Ok(Coercivity { sigma_min: sigma, log });
        }
        beta.push(b);
        w.iter_mut().for_each(|v| *v /= b);
        basis.push(w);
    }
    Err(Error::Spectral { message: "Lanczos did not settle on the bottom of the spectrum".into(), log })
}
