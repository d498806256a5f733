//! Positive currents carried by the leaves of a lamination, as finite sums
//! `T = sum_i m_i [L_i]` over a transversal, with densities, test forms,
//! residuals, domination densities and the refinement toward single leaves.

mod domination;
mod forms;
mod refine;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use domination::{radon_nikodym, reconstruct, to_exact, Weight};
pub use forms::{bump, default_dictionary, DiskQuadrature, TestForm, W_BUMP_RADIUS};
pub use refine::{refine_subdivide, write_trace_csv, RefinementStep};

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::field_ops::Disk;
use crate::io::{to_c64s, JsonComplex};
use crate::lamination::{directed_form, Lamination};
use crate::motion::{disk_samples, HolomorphicMotion};
use crate::scalar::Real;
use crate::C64;

/// Leafwise density of a weighted current: `f(z, leaf index)`.
pub type Density = Arc<dyn Fn(C64, usize) -> f64 + Send + Sync>;

/// `sum_i m_i [L_{alpha_i}]` with `m_i >= 0`.
#[derive(Clone, Debug)]
pub struct LaminarCurrent<T> {
    lam: Arc<Lamination>,
    weights: Vec<T>,
}

impl<T: Real> LaminarCurrent<T> {
    pub fn new(lam: Arc<Lamination>, weights: Vec<T>) -> Result<Self> {
        if weights.len() != lam.tau().len() {
            return Err(Error::validation(format!(
                "{} weights for {} leaves",
                weights.len(),
                lam.tau().len()
            )));
        }
        if let Some(k) = weights.iter().position(|w| !(w.is_finite() && *w >= T::zero())) {
            return Err(Error::validation(format!("weight {} of leaf {k} must be finite and >= 0", weights[k])));
        }
        Ok(Self { lam, weights })
    }

    pub fn lamination(&self) -> &Arc<Lamination> {
        &self.lam
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn with_weights(&self, weights: Vec<T>) -> Result<Self> {
        Self::new(self.lam.clone(), weights)
    }

    pub fn mass(&self, region: Disk) -> Result<T> {
        mass(&WeightedCurrent::from(self.clone()), region)
    }

    pub fn pair(&self, form: &TestForm) -> Result<T> {
        pair(&WeightedCurrent::from(self.clone()), form)
    }
}

/// `f T` with a nonnegative leafwise density `f` in `L^p(||T||)`.
#[derive(Clone)]
pub struct WeightedCurrent<T> {
    base: LaminarCurrent<T>,
    density: Option<Density>,
    exponent: f64,
}

impl<T: std::fmt::Debug> std::fmt::Debug for WeightedCurrent<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WeightedCurrent")
            .field("weights", &self.base.weights)
            .field("has_density", &self.density.is_some())
            .field("exponent", &self.exponent)
            .finish()
    }
}

impl<T: Real> From<LaminarCurrent<T>> for WeightedCurrent<T> {
    fn from(base: LaminarCurrent<T>) -> Self {
        Self { base, density: None, exponent: f64::INFINITY }
    }
}

impl<T: Real> WeightedCurrent<T> {
    /// Checks `f >= 0` and finiteness on sample points of every leaf, and
    /// that the leafwise `L^p` norms are finite.
    pub fn new(base: LaminarCurrent<T>, density: Density, exponent: f64) -> Result<Self> {
        if !(exponent > 1.0) {
            return Err(Error::validation(format!("integrability exponent {exponent} must exceed 1")));
        }
        for k in 0..base.weights.len() {
            for z in disk_samples(4, 12, 0.95) {
                let v = density(z, k);
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::validation(format!("density {v} at z = {z} on leaf {k} must be finite and >= 0")));
                }
            }
        }
        let out = Self { base, density: Some(density), exponent };
        for k in 0..out.base.weights.len() {
            let n = out.leafwise_lp_norm(k)?;
            if !n.is_finite() {
                return Err(Error::validation(format!("density is not in L^{exponent} on leaf {k}")));
            }
        }
        Ok(out)
    }

    pub fn base(&self) -> &LaminarCurrent<T> {
        &self.base
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn density_at(&self, z: C64, leaf: usize) -> f64 {
        self.density.as_ref().map_or(1.0, |f| f(z, leaf))
    }

    /// Same density on new leaf weights.
    pub fn reweighted(&self, weights: Vec<T>) -> Result<Self> {
        Ok(Self { base: self.base.with_weights(weights)?, density: self.density.clone(), exponent: self.exponent })
    }

    /// `(int_{L_k} f^p dA_L)^(1/p)` over the unit disk.
    pub fn leafwise_lp_norm(&self, leaf: usize) -> Result<f64> {
        let m = self.base.lam.motion();
        let a = m.tau()[leaf];
        let p = if self.exponent.is_finite() { self.exponent } else { 2.0 };
        let q = DiskQuadrature::standard(C64::new(0.0, 0.0), 1.0);
        let v = q.integrate(|z| Ok(self.density_at(z, leaf).powf(p) * (1.0 + m.leaf_slope(a, z)?.norm_sqr())))?;
        Ok(v.powf(1.0 / p))
    }

    /// Mass of the leaf piece `leaf` with unit weight.
    pub fn leaf_mass(&self, leaf: usize, region: Disk) -> Result<f64> {
        check_region(region)?;
        let m = self.base.lam.motion();
        let a = m.tau()[leaf];
        DiskQuadrature::standard(region.center, region.radius)
            .integrate(|z| Ok(self.density_at(z, leaf) * (1.0 + m.leaf_slope(a, z)?.norm_sqr())))
    }

    /// Pairing of the leaf piece `leaf` with unit weight and a two-form.
    pub fn leaf_pairing(&self, leaf: usize, form: &TestForm) -> Result<f64> {
        form.check_support()?;
        let psi = match form {
            TestForm::Two { psi, .. } => psi,
            TestForm::One { .. } => {
                return Err(Error::validation("a one-form pairs with the boundary of a current; use the closedness residual"))
            }
        };
        let m = self.base.lam.motion();
        DiskQuadrature::standard(C64::new(0.0, 0.0), form.radius())
            .integrate(|z| Ok(self.density_at(z, leaf) * psi(z, m.leaf(leaf, z)?)))
    }

    /// `<S, d beta>` for the leaf piece `leaf` with unit weight.
    pub fn leaf_boundary_pairing(&self, leaf: usize, form: &TestForm) -> Result<C64> {
        form.check_support()?;
        let coef = match form {
            TestForm::One { coef, .. } => coef,
            TestForm::Two { .. } => return Err(Error::validation("closedness is measured against one-forms")),
        };
        let m = self.base.lam.motion();
        let a = m.tau()[leaf];
        // Pullback of beta to the leaf: g dz + k dzbar.
        let pull = |z: C64| -> Result<(C64, C64)> {
            let w = m.leaf(leaf, z)?;
            let s = m.leaf_slope(a, z)?;
            Ok((coef[0](z, w) + coef[1](z, w) * s, coef[2](z, w) + coef[3](z, w) * s.conj()))
        };
        const H: f64 = 1e-3;
        let d = |z: C64, e: C64| -> Result<(C64, C64)> {
            let p = [pull(z + e * (2.0 * H))?, pull(z + e * H)?, pull(z - e * H)?, pull(z - e * (2.0 * H))?];
            let f = |i: usize| -> C64 {
                let v = |q: &(C64, C64)| if i == 0 { q.0 } else { q.1 };
                (-v(&p[0]) + v(&p[1]) * 8.0 - v(&p[2]) * 8.0 + v(&p[3])) / (12.0 * H)
            };
            Ok((f(0), f(1)))
        };
        let i = C64::new(0.0, 1.0);
        DiskQuadrature::standard(C64::new(0.0, 0.0), form.radius()).integrate_complex(|z| {
            let (gx, kx) = d(z, C64::new(1.0, 0.0))?;
            let (gy, ky) = d(z, i)?;
            let dz_k = (kx - i * ky) * 0.5;
            let dzbar_g = (gx + i * gy) * 0.5;
            // dz ^ dzbar = -2i dx ^ dy.
            Ok((dz_k - dzbar_g) * (-2.0 * i) * self.density_at(z, leaf))
        })
    }
}

fn check_region(region: Disk) -> Result<()> {
    if !(region.radius > 0.0 && region.center.norm() + region.radius <= 1.0 + 1e-12) {
        return Err(Error::validation(format!(
            "region D({}, {}) is not inside the unit disk",
            region.center, region.radius
        )));
    }
    Ok(())
}

/// `sum_i m_i int_region f_i (1 + |phi_i'|^2) dA`: weighted area of the graphs.
pub fn mass<T: Real>(s: &WeightedCurrent<T>, region: Disk) -> Result<T> {
    let mut terms = Vec::new();
    for (k, &m) in s.base.weights.iter().enumerate() {
        if m > T::zero() {
            terms.push(m * T::lit(s.leaf_mass(k, region)?));
        }
    }
    Ok(crate::scalar::pairwise_sum(&terms))
}

/// `<S, psi (i/2) dz ^ dzbar> = sum_i m_i int f_i psi(z, phi_i(z)) dA`.
pub fn pair<T: Real>(s: &WeightedCurrent<T>, form: &TestForm) -> Result<T> {
    form.check_support()?;
    let mut terms = Vec::new();
    for (k, &m) in s.base.weights.iter().enumerate() {
        if m > T::zero() {
            terms.push(m * T::lit(s.leaf_pairing(k, form)?));
        }
    }
    Ok(crate::scalar::pairwise_sum(&terms))
}

/// `max |<S, d beta>|` over the one-forms, with `d beta` obtained by
/// differentiating the pulled-back coefficients.
pub fn closedness_residual<T: Real>(s: &WeightedCurrent<T>, forms: &[TestForm]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for form in forms {
        let mut acc = C64::new(0.0, 0.0);
        for (k, &m) in s.base.weights.iter().enumerate() {
            if m > T::zero() {
                acc += s.leaf_boundary_pairing(k, form)? * m.as_f64();
            }
        }
        worst = worst.max(acc.norm());
    }
    Ok(worst)
}

/// A laminar current plus extra holomorphic graphs `w = g(z)` that need not
/// be leaves; used to probe directedness.
#[derive(Clone, Debug)]
pub struct GraphCurrent<T> {
    pub current: LaminarCurrent<T>,
    pub graphs: Vec<(Expr, T)>,
}

impl<T: Real> From<LaminarCurrent<T>> for GraphCurrent<T> {
    fn from(current: LaminarCurrent<T>) -> Self {
        Self { current, graphs: Vec::new() }
    }
}

/// Sample base points for the directedness residual.
pub fn directedness_samples() -> Vec<C64> {
    disk_samples(4, 16, 0.9)
}

/// `sup |dl_p(t_p)|` over the pieces of positive weight and the sample
/// points, with `t_p` the tangent of the piece and `dl` the form of the
/// leaf through `p`.
pub fn directedness_residual<T: Real>(s: &GraphCurrent<T>) -> Result<f64> {
    let lam = s.current.lamination();
    let m = lam.motion();
    let zs = directedness_samples();
    let mut worst: f64 = 0.0;
    for (k, &wt) in s.current.weights().iter().enumerate() {
        if wt > T::zero() {
            for &z in &zs {
                let form = directed_form(lam, z, m.tau()[k])?;
                worst = worst.max(form.apply(form.tangent()).norm());
            }
        }
    }
    for (g, wt) in &s.graphs {
        if *wt <= T::zero() {
            continue;
        }
        for &z in &zs {
            let w = g.eval(C64::new(0.0, 0.0), z)?;
            const STEP: f64 = 1e-5;
            let slope = (g.eval(C64::new(0.0, 0.0), z + STEP)? - g.eval(C64::new(0.0, 0.0), z - STEP)?) / (2.0 * STEP);
            let alpha = leaf_through(m, z, w)?;
            let form = directed_form(lam, z, alpha)?;
            worst = worst.max(form.apply([C64::new(1.0, 0.0), slope]).norm());
        }
    }
    Ok(worst)
}

fn leaf_through(m: &HolomorphicMotion, z: C64, w: C64) -> Result<C64> {
    if m.is_global() {
        return m.invert_fiber(z, w);
    }
    let mut best = (f64::INFINITY, C64::new(0.0, 0.0));
    for (k, &a) in m.tau().iter().enumerate() {
        let d = (m.leaf(k, z)? - w).norm();
        if d < best.0 {
            best = (d, a);
        }
    }
    Ok(best.1)
}

/// Margin `|phi| <= 1 - eps` assumed for leaves built from a current spec.
pub const CURRENT_EPSILON_BOUND: f64 = 0.05;

/// JSON form of a current. The leaves are those of `formula` (horizontal
/// by default) through `tau`; `density` gives one constant per leaf.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurrentSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
    pub tau: Vec<JsonComplex>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<Vec<f64>>,
    /// Extra graphs `w = g(z)` with weights.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub graphs: Vec<GraphSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub formula: String,
    pub weight: f64,
}

impl CurrentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn lamination(&self) -> Result<Arc<Lamination>> {
        let formula = Expr::parse(self.formula.as_deref().unwrap_or("alpha"))?;
        let motion = HolomorphicMotion::from_formula(formula, to_c64s(&self.tau), CURRENT_EPSILON_BOUND, true)?;
        Ok(Arc::new(Lamination::new(motion)))
    }

    pub fn current(&self) -> Result<WeightedCurrent<f64>> {
        self.current_on(self.lamination()?)
    }

    /// The current on an already built lamination with the same `tau`.
    pub fn current_on(&self, lam: Arc<Lamination>) -> Result<WeightedCurrent<f64>> {
        let base = LaminarCurrent::new(lam, self.weights.clone())?;
        match &self.density {
            None => Ok(base.into()),
            Some(d) => {
                if d.len() != self.weights.len() {
                    return Err(Error::validation(format!("{} densities for {} leaves", d.len(), self.weights.len())));
                }
                let d = d.clone();
                WeightedCurrent::new(base, Arc::new(move |_, k| d[k]), 2.0)
            }
        }
    }

    pub fn graph_current(&self) -> Result<GraphCurrent<f64>> {
        let current = LaminarCurrent::new(self.lamination()?, self.weights.clone())?;
        let graphs = self
            .graphs
            .iter()
            .map(|g| {
                let e = Expr::parse(&g.formula)?;
                if e.mentions(Var::W) || e.mentions(Var::Alpha) {
                    return Err(Error::validation(format!("graph '{}' must depend on z only", g.formula)));
                }
                if !(g.weight.is_finite() && g.weight >= 0.0) {
                    return Err(Error::validation(format!("graph weight {} must be finite and >= 0", g.weight)));
                }
                Ok((e, g.weight))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GraphCurrent { current, graphs })
    }
}
