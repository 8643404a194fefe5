//! TOML experiment configurations and their validation into library objects.

use mflab::elliptic::{assemble, DiscreteOperator};
use mflab::expr::{parse_pi_literal, Expr};
use mflab::green::{disk_oracle, FemGreen, GreenProvider};
use mflab::reduction::BlowupConfig;
use mflab::singular_config::{resonant_set, IndexTriple, SingularSet};
use mflab::surface::{mesh_model, SurfaceModel};
use mflab::tolerances::{DEFAULT_S, EPS_GRID, NEWTON_MAX_BACKTRACK, NEWTON_MAX_ITER, NEWTON_TOL};
use mflab::{Error, Point, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub singular: SingularSpec,
    pub target: TargetSpec,
    #[serde(default)]
    pub run: RunSpec,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// `flat` or `conformal`.
    pub kind: String,
    /// Conformal factor `ψ`, required for `conformal`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingularPointSpec {
    pub x: f64,
    pub y: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingularSpec {
    #[serde(default)]
    pub points: Vec<SingularPointSpec>,
    /// The positive weight `V`.
    pub v: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    /// Index of `ρ*` in the sorted resonant set, starting at 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Regular blow-up points, interior ones first.
    #[serde(default)]
    pub regular: Vec<[f64; 2]>,
    /// Indices of the singular points that blow up.
    #[serde(default)]
    pub q1: Vec<usize>,
    pub r0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSpec {
    pub eps_grid: Vec<f64>,
    /// Uniform mesh size for Green checks and sweeps.
    pub mesh_h: f64,
    /// Background mesh size of the graded Newton meshes.
    pub newton_h: f64,
    /// Lebesgue exponent of residual norms.
    pub s: f64,
    pub seed: u64,
    pub out: String,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec { eps_grid: EPS_GRID.to_vec(), mesh_h: 0.05, newton_h: 0.05, s: DEFAULT_S, seed: 0, out: "out".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSpec {
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub newton_max_backtrack: usize,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        ToleranceSpec { newton_tol: NEWTON_TOL, newton_max_iter: NEWTON_MAX_ITER, newton_max_backtrack: NEWTON_MAX_BACKTRACK }
    }
}

/// Line and column (1-based) of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let (line, col) = e.span().map_or((1, 1), |s| line_col(text, s.start));
            Error::Parse { line, col, message: e.message().to_string() }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration fields are all representable in TOML")
    }

    /// Model surface and singular data.
    pub fn build(&self) -> Result<Lab> {
        let model = match self.model.kind.as_str() {
            "flat" => SurfaceModel::flat_disk(),
            "conformal" => {
                let psi = self.model.psi.as_deref().ok_or_else(|| field_error("model.psi", "is required for a conformal model"))?;
                SurfaceModel::conformal_disk(Expr::parse(psi).map_err(|e| nested("model.psi", e))?)?
            }
            other => return Err(field_error("model.kind", &format!("must be `flat` or `conformal`, got `{other}`"))),
        };
        let v = Expr::parse(&self.singular.v).map_err(|e| nested("singular.v", e))?;
        let points: Vec<(Point, f64)> = self.singular.points.iter().map(|p| ([p.x, p.y], p.gamma)).collect();
        let set = SingularSet::new(&model, &points, v)?;
        let fem = if model.is_flat() { None } else { Some(assemble(&model, mesh_model(&model, self.run.mesh_h, &[])?)?) };
        Ok(Lab { set, fem })
    }
}

fn field_error(field: &str, message: &str) -> Error {
    Error::Validation(format!("{field} {message}"))
}

fn nested(field: &str, e: Error) -> Error {
    match e {
        Error::Parse { line, col, message } => Error::Parse { line, col, message: format!("{field}: {message}") },
        other => Error::Validation(format!("{field}: {other}")),
    }
}

/// Validated geometry and singular data of one experiment.
pub struct Lab {
    pub set: SingularSet,
    /// Operator backing the finite element Green function on conformal models.
    pub fem: Option<DiscreteOperator>,
}

impl Lab {
    /// Closed form on the flat disk, finite elements otherwise.
    pub fn green(&self) -> Result<Box<dyn GreenProvider + '_>> {
        match &self.fem {
            None => Ok(Box::new(disk_oracle(&self.set.model)?)),
            Some(op) => Ok(Box::new(FemGreen::new(op))),
        }
    }

    /// The blow-up configuration of `target`, checked against `m` when given.
    pub fn blowup<'a>(&'a self, target: &TargetSpec, green: &'a dyn GreenProvider) -> Result<BlowupConfig<'a>> {
        let cfg = BlowupConfig::new(&self.set, green, &target.regular, &target.q1, target.r0)?;
        if let Some(m) = target.m {
            let rho = self.resonant_value(m)?;
            if (cfg.rho_star() - rho).abs() > 1e-9 * rho {
                return Err(field_error(
                    "target",
                    &format!("realizes ρ* = {:.6}, but resonant value m = {m} is {rho:.6}", cfg.rho_star()),
                ));
            }
        }
        Ok(cfg)
    }

    /// The `m`-th resonant value.
    pub fn resonant_value(&self, m: usize) -> Result<f64> {
        if m == 0 {
            return Err(field_error("target.m", "starts at 1"));
        }
        let mut cap = 8.0 * std::f64::consts::PI * m as f64;
        loop {
            let r = resonant_set(&self.set, cap)?;
            if let Some(&v) = r.values.get(m - 1) {
                return Ok(v);
            }
            cap *= 2.0;
        }
    }
}

/// Parses a resonance cap such as `40pi`.
pub fn parse_cap(s: &str) -> Result<f64> {
    parse_pi_literal(s)
}

/// `(p, q, Q₁)` of a triple as text.
pub fn triple_label(t: &IndexTriple) -> String {
    let q1: Vec<String> = t.q1.iter().map(|i| i.to_string()).collect();
    format!("p={} q={} Q1={{{}}}", t.p, t.q, q1.join(","))
}
