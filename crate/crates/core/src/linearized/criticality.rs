//! Grid scan of the reduced energy `Ẽ_ε(ξ⁰) = E_ε(u(ξ⁰))` against `−½F`.

use super::newton::{newton_correct, NewtonOptions};
use super::operator::{kernel_space, newton_operator, LinearizedOperator};
use crate::bubbles::Workspace;
use crate::reduction::{assemble_w, grad_f, reduced_f, BlowupConfig};
use crate::{Error, Result};
use rayon::prelude::*;

/// One node of the scan. Failed nodes keep their error and carry no energy.
#[derive(Clone, Debug, PartialEq)]
pub struct GridNode {
    /// Values of the two scanned coordinates.
    pub at: [f64; 2],
    pub f: f64,
    pub grad_f: [f64; 2],
    pub energy: Option<f64>,
    pub error: Option<String>,
}

/// Outcome of [`criticality_equivalence_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalityReport {
    pub eps: f64,
    pub spacing: f64,
    /// Row-major, `n × n`.
    pub nodes: Vec<GridNode>,
    pub n: usize,
    /// `(node, component, ∂Ẽ, −½∂F)` at interior nodes, central differences.
    pub slopes: Vec<(usize, usize, f64, f64)>,
    /// Largest `|∂Ẽ + ½∂F| / |½∂F|` over components with `|∂F|` at least a
    /// tenth of its largest value.
    pub max_discrepancy: f64,
    /// Interior node minimizing `|∇Ẽ|`.
    pub argmin_energy: Option<[f64; 2]>,
    /// Interior node minimizing `|∇F|`.
    pub argmin_f: [f64; 2],
}

impl CriticalityReport {
    /// Whether the two grid-stationary points lie within one cell.
    pub fn within_one_cell(&self) -> bool {
        self.argmin_energy.is_some_and(|e| {
            (e[0] - self.argmin_f[0]).abs().max((e[1] - self.argmin_f[1]).abs()) <= self.spacing * (1.0 + 1e-9)
        })
    }

    pub fn failed_nodes(&self) -> usize {
        self.nodes.iter().filter(|n| n.energy.is_none()).count()
    }
}

/// Scans the first two free coordinates of `cfg` on an `n × n` grid of the
/// given spacing centred at `centre`, correcting `W` by Newton with the
/// translation modes projected out at every node.
pub fn criticality_equivalence_check(
    cfg: &BlowupConfig<'_>,
    centre: &[f64],
    spacing: f64,
    n: usize,
    eps: f64,
    h: f64,
) -> Result<CriticalityReport> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::Parameter(format!("grid size {n} must be odd and at least 3")));
    }
    if centre.len() != cfg.coords().len() || centre.len() < 2 {
        return Err(Error::Parameter("the scan needs at least two free coordinates".into()));
    }
    let half = (n / 2) as f64;
    let coords: Vec<Vec<f64>> = (0..n * n)
        .map(|k| {
            let mut c = centre.to_vec();
            c[0] += ((k % n) as f64 - half) * spacing;
            c[1] += ((k / n) as f64 - half) * spacing;
            c
        })
        .collect();
    let nodes = coords
        .par_iter()
        .map(|c| {
            let at = [c[0], c[1]];
            let local = cfg.at(c)?;
            let f = reduced_f(&local)?;
            let g = grad_f(&local)?;
            let energy = node_energy(&local, eps, h);
            Ok(GridNode {
                at,
                f,
                grad_f: [g[0], g[1]],
                energy: energy.as_ref().ok().copied(),
                error: energy.err().map(|e| e.to_string()),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut slopes = Vec::new();
    let mut e_grad: Vec<(usize, Option<f64>)> = Vec::new();
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let k = j * n + i;
            let mut norm = Some(0.0);
            for (comp, (a, b)) in [(k - 1, k + 1), (k - n, k + n)].into_iter().enumerate() {
                let df = (nodes[b].f - nodes[a].f) / (2.0 * spacing);
                match (nodes[a].energy, nodes[b].energy) {
                    (Some(ea), Some(eb)) => {
                        let de = (eb - ea) / (2.0 * spacing);
                        slopes.push((k, comp, de, -0.5 * df));
                        norm = norm.map(|s| s + de * de);
                    }
                    _ => norm = None,
                }
            }
            e_grad.push((k, norm));
        }
    }
    let scale = slopes.iter().fold(0.0f64, |m, s| m.max(s.3.abs()));
    let max_discrepancy = slopes
        .iter()
        .filter(|s| s.3.abs() >= 0.1 * scale && scale > 0.0)
        .map(|s| (s.2 - s.3).abs() / s.3.abs())
        .fold(0.0, f64::max);
    let argmin_energy = e_grad
        .iter()
        .filter_map(|&(k, g)| g.map(|g| (k, g)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| nodes[k].at);
    let argmin_f = e_grad
        .iter()
        .map(|&(k, _)| (k, nodes[k].grad_f[0].hypot(nodes[k].grad_f[1])))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| nodes[k].at)
        .expect("interior nodes exist for n ≥ 3");
    Ok(CriticalityReport { eps, spacing, nodes, n, slopes, max_discrepancy, argmin_energy, argmin_f })
}

/// `E_ε(u)` at one configuration.
fn node_energy(cfg: &BlowupConfig<'_>, eps: f64, h: f64) -> Result<f64> {
    let op = newton_operator(cfg, eps, h)?;
    let ws = Workspace::new(&op, cfg.green());
    let st = assemble_w(cfg, ws, eps)?;
    let lin = LinearizedOperator::new(&st)?;
    let ks = kernel_space(&lin)?;
    let kernel = (ks.dim() > 0).then_some(&ks);
    Ok(newton_correct(&lin, kernel, NewtonOptions::default())?.energy)
}
