//! Subcommand pipelines. Each returns a [`Outcome`] whose report the caller
//! writes to the output directory.

use crate::config::{triple_label, ExperimentConfig, Lab, RunSpec};
use crate::criteria::{self, VerifyOptions};
use crate::report::{num, Report, Table};
use crate::svg::{loglog, Series};
use mflab::bubbles::{diagonal_expansion, dirichlet, project_bubble, Bubble, Workspace};
use mflab::elliptic::{assemble, DiscreteOperator};
use mflab::fit::{fit_slope, FitSpace};
use mflab::green::{disk_oracle, green, GreenProvider};
use mflab::linearized::{kernel_space, newton_correct, newton_operator, LinearizedOperator, NewtonOptions};
use mflab::reduction::{assemble_w, find_critical, ReducedObjective, SearchStatus, SweepRow};
use mflab::singular_config::{enumerate_index_sets, resonant_set};
use mflab::surface::mesh_model;
use mflab::tolerances::LAMBDA_LADDER;
use mflab::{Error, Point, Result, ScaleConstants};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::path::PathBuf;

/// Command-line overrides of the configuration.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub eps_grid: Option<Vec<f64>>,
    pub mesh_h: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub svg: bool,
}

impl Overrides {
    pub fn run(&self, cfg: Option<&ExperimentConfig>) -> RunSpec {
        let mut r = cfg.map(|c| c.run.clone()).unwrap_or_default();
        if let Some(e) = &self.eps_grid {
            r.eps_grid = e.clone();
        }
        if let Some(h) = self.mesh_h {
            r.mesh_h = h;
        }
        if let Some(s) = self.seed {
            r.seed = s;
        }
        if let Some(o) = &self.out {
            r.out = o.display().to_string();
        }
        r
    }
}

/// Result of a subcommand.
#[derive(Debug, Default)]
pub struct Outcome {
    /// Every enabled check passed.
    pub pass: bool,
    /// A numeric failure interrupted part of the run.
    pub numeric_failure: bool,
    pub report: Report,
}

fn fit_line(label: &str, pts: &[(f64, f64)], space: FitSpace) -> (String, Option<(f64, f64)>) {
    match fit_slope(pts, space) {
        Ok(f) => (format!("{label}: slope {:.4}, R2 {:.4}", f.slope, f.r2), Some((f.slope, f.r2))),
        Err(e) => (format!("{label}: no fit ({e})"), None),
    }
}

/// Uniform mesh for bubble and sweep work; conformal models reuse the Green mesh.
fn operator<'l>(lab: &'l Lab, run: &RunSpec, owned: &'l mut Option<DiscreteOperator>) -> Result<&'l DiscreteOperator> {
    match &lab.fem {
        Some(op) => Ok(op),
        None => Ok(owned.insert(assemble(&lab.set.model, mesh_model(&lab.set.model, run.mesh_h, &[])?)?)),
    }
}

/// FEM Green functions against the closed form (flat disk) and symmetry.
pub fn green_check(cfg: &ExperimentConfig, ov: &Overrides) -> Result<Outcome> {
    let lab = cfg.build()?;
    let h = ov.mesh_h.unwrap_or(0.02);
    let model = &lab.set.model;
    let op = assemble(model, mesh_model(model, h, &[])?)?;
    let mut sources: Vec<Point> = lab.set.points.iter().map(|p| p.point).collect();
    sources.extend(cfg.target.regular.iter().copied());
    if sources.is_empty() {
        sources.push([0.0, 0.0]);
    }
    let fields = sources.par_iter().map(|&xi| green(&op, xi)).collect::<Result<Vec<_>>>()?;
    let oracle = if model.is_flat() { Some(disk_oracle(model)?) } else { None };
    let mut table = Table::new(["xi_x", "xi_y", "robin_fem", "robin_oracle", "max_abs_error"]);
    let mut out = Outcome { pass: true, ..Default::default() };
    for (f, &xi) in fields.iter().zip(&sources) {
        let r = f.robin_value(&op)?;
        let (ro, err) = match &oracle {
            Some(o) => {
                let mut err: f64 = 0.0;
                for i in 1..=19 {
                    for k in 0..24 {
                        let (r, t) = (0.05 * i as f64, 2.0 * PI * k as f64 / 24.0 + 0.1);
                        let x = [r * t.cos(), r * t.sin()];
                        if (x[0] - xi[0]).hypot(x[1] - xi[1]) >= 0.1 {
                            err = err.max((f.value(&op, x)? - o.g(x, xi)?).abs());
                        }
                    }
                }
                (o.robin(xi)?, err)
            }
            None => (f64::NAN, f64::NAN),
        };
        out.pass &= !(err > 1e-3);
        table.push(vec![num(xi[0]), num(xi[1]), num(r), num(ro), num(err)]);
        out.report.line(format!("xi = ({:.3}, {:.3}): R = {r:.6}, oracle {ro:.6}, max error {err:.3e}", xi[0], xi[1]));
    }
    let mut sym: f64 = 0.0;
    for (i, fi) in fields.iter().enumerate() {
        for (j, fj) in fields.iter().enumerate().skip(i + 1) {
            sym = sym.max((fi.value(&op, sources[j])? - fj.value(&op, sources[i])?).abs());
        }
    }
    out.pass &= sym <= 1e-3;
    out.report.line(format!("symmetry defect {sym:.3e} at h = {h}"));
    out.report.csv("green.csv", &table)?;
    Ok(out)
}

/// Mass and self-energy of the bubbles of the target configuration over the λ ladder.
pub fn bubble_check(cfg: &ExperimentConfig, ov: &Overrides) -> Result<Outcome> {
    let lab = cfg.build()?;
    let run = ov.run(Some(cfg));
    let g = lab.green()?;
    let bc = lab.blowup(&cfg.target, g.as_ref())?;
    let mut owned = None;
    let op = operator(&lab, &run, &mut owned)?;
    let ws = Workspace::new(op, g.as_ref());
    let mut table = Table::new(["center", "gamma", "lambda_a", "mass_ratio", "diagonal_ratio"]);
    let mut out = Outcome { pass: true, ..Default::default() };
    for (i, c) in bc.centers().iter().enumerate() {
        for la in LAMBDA_LADDER {
            let lambda = la.powf(1.0 / c.a());
            let mass = {
                let b = Bubble::new(bc.model(), c.point, c.gamma, lambda)?;
                b.mass() / b.target_mass()
            };
            let p = project_bubble(ws, c.point, c.gamma, lambda)?;
            let sc = ScaleConstants::new(c.gamma, lambda, p.bubble.varrho(), op.area())?;
            let diag = dirichlet(&p, &p)? / diagonal_expansion(c.gamma, lambda, p.bubble.varrho(), g.robin(c.point)?, sc.eps0);
            if la == 100.0 {
                out.pass &= (mass - 1.0).abs() <= 0.01;
            }
            if la == 300.0 {
                out.pass &= (diag - 1.0).abs() <= 0.03;
            }
            table.push(vec![i.to_string(), num(c.gamma), num(la), num(mass), num(diag)]);
            out.report.line(format!("center {i} (gamma {}): lambda^a = {la}: mass ratio {mass:.6}, diagonal ratio {diag:.6}", c.gamma));
        }
    }
    out.report.csv("bubbles.csv", &table)?;
    Ok(out)
}

/// Sorted resonant values up to `cap` with their index triples.
pub fn resonance(cfg: &ExperimentConfig, cap: f64) -> Result<Outcome> {
    let lab = cfg.build()?;
    let r = resonant_set(&lab.set, cap)?;
    let mut table = Table::new(["m", "value", "value_over_pi", "triples"]);
    let mut out = Outcome { pass: true, ..Default::default() };
    for (k, &v) in r.values.iter().enumerate() {
        let idx = enumerate_index_sets(&lab.set, v)?;
        let labels: Vec<String> = idx.triples.iter().map(triple_label).collect();
        table.push(vec![(k + 1).to_string(), num(v), format!("{:.9}", v / PI), labels.join("; ")]);
        out.report.line(format!("{:3}  {:>10.6}pi  {}", k + 1, v / PI, labels.join("; ")));
    }
    for c in &r.collisions {
        out.report.line(format!("near-collision: {} vs {} (gap {:.3e})", triple_label(&c.a), triple_label(&c.b), c.gap));
    }
    out.report.csv("resonance.csv", &table)?;
    Ok(out)
}

/// Critical point search for `F` from the configured centres.
pub fn find_critical_cmd(cfg: &ExperimentConfig, ov: &Overrides) -> Result<Outcome> {
    let lab = cfg.build()?;
    let run = ov.run(Some(cfg));
    let g = lab.green()?;
    let bc = lab.blowup(&cfg.target, g.as_ref())?;
    let mut out = Outcome { pass: true, ..Default::default() };
    let obj = ReducedObjective { template: &bc };
    let start = bc.coords();
    if start.is_empty() {
        out.report.line("no free centres: F is a constant");
        return Ok(out);
    }
    let r = find_critical(&obj, &start, bc.sigma, run.seed)?;
    let stable = r.stability.as_ref().map(|s| s.stable());
    out.pass = r.status == SearchStatus::Converged && stable != Some(false);
    let mut table = Table::new(["coordinate", "start", "critical"]);
    for (k, (s, x)) in start.iter().zip(&r.x).enumerate() {
        table.push(vec![k.to_string(), num(*s), num(*x)]);
    }
    out.report.line(format!(
        "status {:?} after {} iterations: F = {:.10}, |grad F| = {:.3e}",
        r.status, r.iterations, r.value, r.grad_norm
    ));
    out.report.line(format!("critical coordinates {:?}", r.x));
    if let Some(s) = &r.stability {
        out.report.line(format!("perturbation probe: stable = {}, max displacement {:.3e}", s.stable(), s.displacements.iter().fold(0.0f64, |a, &b| a.max(b))));
    }
    out.report.csv("critical.csv", &table)?;
    Ok(out)
}

fn sweep_table(n: usize) -> Table {
    Table::new(SweepRow::header(n))
}

/// Residual, energy and mass over the ε grid with fitted slopes.
pub fn sweep(cfg: &ExperimentConfig, ov: &Overrides) -> Result<Outcome> {
    let lab = cfg.build()?;
    let run = ov.run(Some(cfg));
    let g = lab.green()?;
    let bc = lab.blowup(&cfg.target, g.as_ref())?;
    let mut owned = None;
    let op = operator(&lab, &run, &mut owned)?;
    let ws = Workspace::new(op, g.as_ref());
    let rows: Vec<(f64, Result<SweepRow>)> =
        run.eps_grid.par_iter().map(|&eps| (eps, assemble_w(&bc, ws, eps).and_then(|st| st.row(run.s)))).collect();
    let mut out = Outcome { pass: true, ..Default::default() };
    let mut table = sweep_table(bc.centers().len());
    let mut ok = Vec::new();
    for (eps, r) in rows {
        match r {
            Ok(row) => {
                table.push(row.record());
                ok.push(row);
            }
            Err(e) => {
                out.numeric_failure |= !matches!(e, Error::Resolution(_));
                out.report.line(format!("eps = {eps:e}: {e}"));
            }
        }
    }
    let rho = bc.rho_star();
    for r in &ok {
        out.report.line(format!(
            "eps = {:.1e}: gap/rho* {:+.4}, corrected {:+.4}, residual {:.3e}, mass/rho* {:.5}",
            r.eps,
            r.gap / rho,
            r.gap_corrected / rho,
            r.res_norm,
            r.mass / rho
        ));
    }
    let res: Vec<(f64, f64)> = ok.iter().map(|r| (r.eps, r.res_norm)).collect();
    let gap: Vec<(f64, f64)> = ok.iter().map(|r| (r.eps, r.gap_corrected.abs())).collect();
    let floor = 0.9 / (1.0 + bc.gamma_star_plus());
    let (line, fit) = fit_line("residual vs eps", &res, FitSpace::LogLog);
    out.report.line(format!("{line} (required >= {floor:.4})"));
    out.pass &= matches!(fit, Some((s, r2)) if s >= floor && r2 >= 0.9);
    let mut fits = Table::new(["series", "slope", "r2"]);
    if let Some((s, r2)) = fit {
        fits.push(vec!["residual".into(), num(s), num(r2)]);
    }
    if let (line, Some((s, r2))) = fit_line("|corrected gap| vs eps", &gap, FitSpace::LogLog) {
        out.report.line(line);
        fits.push(vec!["gap_corrected".into(), num(s), num(r2)]);
    }
    out.report.csv("sweep.csv", &table)?;
    out.report.csv("fits.csv", &fits)?;
    if ov.svg {
        let stated: Vec<(f64, f64)> = ok.iter().map(|r| (r.eps, r.gap.abs())).collect();
        out.report.file(
            "gap.svg",
            loglog("energy gap", "eps", "|gap|", &[Series { label: "stated", points: stated }, Series { label: "corrected", points: gap }]),
        );
        out.report.file("residual.svg", loglog("residual", "eps", "residual norm", &[Series { label: "residual", points: res }]));
    }
    Ok(out)
}

/// Newton correction over the ε grid on graded meshes.
pub fn newton(cfg: &ExperimentConfig, ov: &Overrides) -> Result<Outcome> {
    let lab = cfg.build()?;
    if lab.fem.is_some() {
        return Err(Error::Unsupported("Newton correction is implemented on the flat disk".into()));
    }
    let run = ov.run(Some(cfg));
    let g = lab.green()?;
    let bc = lab.blowup(&cfg.target, g.as_ref())?;
    let opts = NewtonOptions {
        tol: cfg.tolerances.newton_tol,
        max_iter: cfg.tolerances.newton_max_iter,
        max_backtrack: cfg.tolerances.newton_max_backtrack,
    };
    let results: Vec<(f64, Result<_>)> = run
        .eps_grid
        .par_iter()
        .map(|&eps| {
            let r = (|| {
                let op = newton_operator(&bc, eps, run.newton_h)?;
                let ws = Workspace::new(&op, g.as_ref());
                let st = assemble_w(&bc, ws, eps)?;
                let lin = LinearizedOperator::new(&st)?;
                let ks = kernel_space(&lin)?;
                let c = newton_correct(&lin, (ks.dim() > 0).then_some(&ks), opts)?;
                Ok(c.report(&lin))
            })();
            (eps, r)
        })
        .collect();
    let mut out = Outcome { pass: true, ..Default::default() };
    let mut table = Table::new(["eps", "iterations", "residual", "phi_norm", "mass", "mass_target", "energy", "c_norm"]);
    let mut ok = Vec::new();
    for (eps, r) in results {
        match r {
            Ok(n) => {
                table.push(vec![
                    format!("{:.6e}", n.eps),
                    n.iterations.to_string(),
                    num(n.residual),
                    num(n.phi_norm),
                    num(n.mass),
                    num(n.mass_target),
                    num(n.energy),
                    num(n.c_norm),
                ]);
                out.report.line(format!(
                    "eps = {eps:.1e}: {} iterations, |phi| {:.3e}, mass/rho* {:.5}, |c| {:.2e}",
                    n.iterations,
                    n.phi_norm,
                    n.mass / n.mass_target,
                    n.c_norm
                ));
                ok.push(n);
            }
            Err(e) => {
                out.numeric_failure |= !matches!(e, Error::Resolution(_));
                out.report.line(format!("eps = {eps:e}: {e}"));
            }
        }
    }
    match ok.last() {
        Some(n) => out.pass &= (n.mass / n.mass_target - 1.0).abs() <= 0.01,
        None => out.pass = false,
    }
    let phi: Vec<(f64, f64)> = ok.iter().map(|n| (n.eps, n.phi_norm)).collect();
    let (line, fit) = fit_line("|phi| vs eps", &phi, FitSpace::LogLog);
    out.report.line(line);
    let mut fits = Table::new(["series", "slope", "r2"]);
    if let Some((s, r2)) = fit {
        fits.push(vec!["phi_norm".into(), num(s), num(r2)]);
    }
    out.report.csv("newton.csv", &table)?;
    out.report.csv("newton_fits.csv", &fits)?;
    if ov.svg {
        let mass: Vec<(f64, f64)> = ok.iter().map(|n| (n.eps, (n.mass / n.mass_target - 1.0).abs())).collect();
        out.report.file("mass.svg", loglog("mass convergence", "eps", "|mass/rho* - 1|", &[Series { label: "mass", points: mass }]));
    }
    Ok(out)
}

/// All acceptance criteria.
pub fn verify_all(cfg: Option<&ExperimentConfig>, ov: &Overrides) -> Result<Outcome> {
    let run = ov.run(cfg);
    let opts = VerifyOptions {
        mesh_h: run.mesh_h,
        newton_h: run.newton_h,
        eps_grid: run.eps_grid.clone(),
        seed: run.seed,
        ..VerifyOptions::default()
    };
    let results = criteria::run_all(&opts);
    let mut out = Outcome { pass: true, ..Default::default() };
    let mut table = Table::new(["criterion", "name", "status", "value", "target"]);
    let mut metrics = Table::new(["criterion", "metric", "value"]);
    for c in &results {
        out.pass &= c.pass;
        out.numeric_failure |= c.error.is_some();
        out.report.line(c.line());
        table.push(vec![
            c.id.to_string(),
            c.name.to_string(),
            if c.pass { "PASS".into() } else { "FAIL".into() },
            num(c.value),
            c.target.clone(),
        ]);
        for (k, v) in &c.metrics {
            metrics.push(vec![c.id.to_string(), k.clone(), num(*v)]);
        }
    }
    out.report.csv("criteria.csv", &table)?;
    out.report.csv("criteria_metrics.csv", &metrics)?;
    Ok(out)
}

