use serde::{Deserialize, Serialize};

use super::trace::{approximate, w1p_error, ApproxTable, ProjectionTrace};
use super::{localize, HolomorphicExpansion, MollifiedLamination};
use crate::beltrami::p_max;
use crate::error::{Error, Result};
use crate::field_ops::GridSpec;
use crate::lamination::{FormulaFunction, LeafGrid, StraightenedFunction};
use crate::motion::disk_samples;
use crate::motion::{HolomorphicMotion, MotionSpec};

/// Largest admissible gap between the resummed reference leaves and the
/// motion itself.
pub const EXTENSION_TOLERANCE: f64 = 1e-3;
/// Slack on the dilatation bound when counting samples of `nu`.
pub const NU_SLACK: f64 = 5e-2;
/// Radius of the disk used for the projection norms.
pub const TRACE_RADIUS: f64 = 0.9;

/// A built-in family by name or a full motion description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MotionChoice {
    Builtin(String),
    Spec(MotionSpec),
}

impl MotionChoice {
    pub fn motion(&self) -> Result<HolomorphicMotion> {
        match self {
            MotionChoice::Builtin(name) => HolomorphicMotion::builtin(name),
            MotionChoice::Spec(spec) => HolomorphicMotion::from_spec(spec),
        }
    }
}

fn default_motion() -> MotionChoice {
    MotionChoice::Builtin("shear".into())
}
fn default_radius() -> f64 {
    0.1
}
fn default_function() -> String {
    "alpha".into()
}
fn default_epsilons() -> Vec<f64> {
    vec![0.2, 0.1, 0.05]
}
fn default_p() -> f64 {
    4.0
}
fn default_delta() -> f64 {
    0.1
}
fn default_grid_n() -> usize {
    256
}
fn default_grid_l() -> f64 {
    2.0
}
fn default_leaf_step() -> f64 {
    0.05
}

/// Configuration of an approximation run.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxConfig {
    #[serde(default = "default_motion")]
    pub motion: MotionChoice,
    /// Localization radius `r`.
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Real part of this expression in `z` and `alpha` is the function to approximate.
    #[serde(default = "default_function")]
    pub function: String,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    #[serde(default = "default_grid_l")]
    pub grid_l: f64,
    #[serde(default = "default_leaf_step")]
    pub leaf_step: f64,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

/// Everything a run needs, built from a validated config.
struct Prepared {
    motion: HolomorphicMotion,
    kappa: f64,
    function: FormulaFunction,
    grid: GridSpec,
    leaves: LeafGrid,
}

impl ApproxConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    fn prepare(&self) -> Result<Prepared> {
        let motion = self.motion.motion()?;
        let local = localize(&motion, self.radius)?;
        let function = FormulaFunction::parse(&self.function)?;
        if self.epsilons.is_empty() {
            return Err(Error::validation("the epsilon list is empty"));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(Error::validation(format!("epsilon = {e} must be positive")));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::validation(format!("p = {} must exceed 1", self.p)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::validation(format!("delta = {} must lie in (0, 1)", self.delta)));
        }
        let grid = GridSpec::new(self.grid_l, self.grid_n)?;
        let biggest = self.epsilons.iter().copied().fold(0.0, f64::max);
        if 1.0 + biggest + 2.0 * grid.spacing() >= grid.half_width() {
            return Err(Error::validation(format!(
                "epsilon = {biggest} pushes the mollified support past the cell of half-width {}",
                grid.half_width()
            )));
        }
        if let Some(t) = local.motion.tau().iter().find(|t| t.norm() >= 1.0) {
            return Err(Error::validation(format!("leaf label {t} lies outside the unit disk")));
        }
        let reach = 1.0 - self.delta + self.leaf_step;
        if !(self.leaf_step > 0.0 && reach < 1.0) {
            return Err(Error::validation(format!(
                "leaf step {} must be positive and smaller than delta = {}",
                self.leaf_step, self.delta
            )));
        }
        let leaves = LeafGrid::new(self.leaf_step, reach)?;
        Ok(Prepared { motion: local.motion, kappa: local.kappa, function, grid, leaves })
    }

    /// Checks the whole configuration without computing anything.
    pub fn validate(&self) -> Result<()> {
        self.prepare().map(|_| ())
    }
}

/// One row of the convergence table.
#[derive(Clone, Debug, Serialize)]
pub struct PipelineReport {
    pub epsilon: f64,
    pub kappa: f64,
    pub p: f64,
    pub p_max: f64,
    pub out_of_regime: bool,
    pub sup_error: f64,
    pub w1p_error: f64,
    pub w1p_error_per_leaf: Vec<f64>,
    pub nu_sup: f64,
    pub nu_within: f64,
    pub flagged_points: Vec<[f64; 2]>,
    pub grad_pi_lp: f64,
    pub grad_pi_lp_per_leaf: Vec<f64>,
    pub leaf_deviation: f64,
    pub mu_sup: f64,
    pub source_mu_sup: f64,
    pub extension_defect: f64,
    pub taylor_order: usize,
}

pub struct PipelineRun {
    pub reports: Vec<PipelineReport>,
    pub tables: Vec<ApproxTable>,
}

/// Localize, expand, mollify and transport for each epsilon in turn.
pub fn run_pipeline(cfg: &ApproxConfig) -> Result<PipelineRun> {
    let prep = cfg.prepare()?;
    let tau = prep.motion.tau().to_vec();
    let expansion = HolomorphicExpansion::new(&prep.motion, prep.grid)?;
    let reference = MollifiedLamination::from_expansion(&expansion, 0.0, &tau)?;
    let source_mu_sup = reference.mu_sup();

    let zs = disk_samples(4, 16, 1.0 - cfg.delta);
    let mut extension_defect: f64 = 0.0;
    for &a in &tau {
        for &z in &zs {
            extension_defect = extension_defect.max((reference.h(z, a)? - prep.motion.phi(a, z)?).norm());
        }
    }
    if extension_defect > EXTENSION_TOLERANCE {
        return Err(Error::domain(format!(
            "the resummed leaves miss the motion by {extension_defect:e}; labels must sit well inside the unit disk"
        )));
    }

    let pmax = p_max(prep.kappa)?;
    let g: &dyn StraightenedFunction = &prep.function;
    let mut reports = Vec::new();
    let mut tables = Vec::new();
    for &eps in &cfg.epsilons {
        let moll = MollifiedLamination::from_expansion(&expansion, eps, &tau)?;
        let table = approximate(g, &reference, &moll, &prep.leaves)?;
        let w1p = w1p_error(&table, cfg.p, cfg.delta, prep.kappa)?;
        let mut nu_sup: f64 = 0.0;
        let (mut good, mut count) = (0.0, 0usize);
        let mut flagged = Vec::new();
        let mut grad = Vec::new();
        for (k, &a) in tau.iter().enumerate() {
            let pi = table.labels[k].iter().map(|l| l - a).collect();
            let trace = ProjectionTrace::from_samples(a, table.grid.clone(), pi);
            let s = trace.nu_summary(TRACE_RADIUS, prep.kappa, NU_SLACK);
            nu_sup = nu_sup.max(s.sup);
            good += s.within * s.samples as f64;
            count += s.samples;
            flagged.extend(s.flagged);
            grad.push(trace.grad_lp(4.0, TRACE_RADIUS));
        }
        reports.push(PipelineReport {
            epsilon: eps,
            kappa: prep.kappa,
            p: cfg.p,
            p_max: pmax,
            out_of_regime: w1p.out_of_regime,
            sup_error: table.sup_error(1.0 - cfg.delta),
            w1p_error: w1p.total,
            w1p_error_per_leaf: w1p.per_leaf,
            nu_sup,
            nu_within: if count == 0 { 1.0 } else { good / count as f64 },
            flagged_points: flagged,
            grad_pi_lp: grad.iter().copied().fold(0.0, f64::max),
            grad_pi_lp_per_leaf: grad,
            leaf_deviation: moll.leaf_deviation(&reference, &zs)?,
            mu_sup: moll.mu_sup(),
            source_mu_sup,
            extension_defect,
            taylor_order: moll.order(),
        });
        tables.push(table);
    }
    Ok(PipelineRun { reports, tables })
}

impl PipelineRun {
    /// `|f_eps - f|` for run `i`: one row per leaf, one column per leaf-grid node.
    pub fn heatmap(&self, i: usize) -> (usize, usize, Vec<f64>) {
        let t = &self.tables[i];
        let values = t.approx.iter().zip(&t.exact).flat_map(|(a, e)| a.iter().zip(e).map(|(x, y)| (x - y).abs())).collect();
        (t.grid.len(), t.tau.len(), values)
    }
}
