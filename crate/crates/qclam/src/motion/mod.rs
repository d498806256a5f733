//! Holomorphic motions given as families of graphs `w = phi_alpha(z)` over
//! the unit disk, their holonomy, and the estimates they satisfy.

mod checks;
mod holonomy;

use serde::{Deserialize, Serialize};

pub use checks::{
    check_boundedness, check_disjointness, check_harnack_hoelder, check_schwarz, disk_samples, harnack_sweep,
    holder_exponent, BoundednessReport, DisjointnessReport, HarnackReport, HarnackSweep, HolderReport,
    SchwarzReport, SCHWARZ_SLACK,
};
pub use holonomy::{beltrami_of_holonomy, holonomy, mu_at, HolonomyBeltrami, HolonomyMap};

use crate::error::{Error, Result};
use crate::expr::{check_leaf_holomorphy, Expr, HolomorphyReport};
use crate::io::{from_c64s, to_c64s, JsonComplex};
use crate::C64;

/// Built-in families: name and formula.
pub const BUILTIN_FAMILIES: [(&str, &str); 5] = [
    ("product", "alpha"),
    ("shear", "alpha + z*conj(alpha)"),
    ("affine", "alpha*(1 + z/2)"),
    ("exp-shear", "alpha + z*exp(z)*conj(alpha)/4"),
    ("conformal", "alpha*exp(z/2)"),
];

/// Transversal used by the built-ins; every family keeps these leaves inside
/// `D(0, 0.9)`.
pub const BUILTIN_TAU: [[f64; 2]; 4] = [[0.3, 0.0], [0.0, 0.1], [-0.2, 0.15], [0.1, -0.25]];

/// Largest polynomial degree fitted to tabulated leaves.
pub const MAX_FIT_DEGREE: usize = 6;

#[derive(Clone, Debug)]
enum Leaves {
    Formula(Expr),
    /// One polynomial in `z` per element of `tau`, lowest degree first.
    Table(Vec<Vec<C64>>),
}

/// A family of disjoint holomorphic graphs `L_alpha = {w = phi_alpha(z)}`
/// indexed by a finite transversal `tau`.
///
/// Formula motions may be flagged global, meaning the formula is a motion
/// of the whole plane and every fiber point lies on some leaf. Tabulated
/// motions are fitted by least-squares polynomials and are never global.
#[derive(Clone, Debug)]
pub struct HolomorphicMotion {
    leaves: Leaves,
    tau: Vec<C64>,
    epsilon_bound: f64,
    global: bool,
}

/// JSON form of a motion. Exactly one of `formula` and `leaves` is present;
/// `leaves[i]` lists `[z, w]` samples of the leaf through `tau[i]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaves: Option<Vec<Vec<[JsonComplex; 2]>>>,
    pub tau: Vec<JsonComplex>,
    pub epsilon_bound: f64,
    #[serde(default)]
    pub global: bool,
}

impl HolomorphicMotion {
    pub fn from_formula(formula: Expr, tau: Vec<C64>, epsilon_bound: f64, global: bool) -> Result<Self> {
        if formula.mentions(crate::expr::Var::W) {
            return Err(Error::validation("leaf formulas may only use alpha and z"));
        }
        Self::checked(Leaves::Formula(formula), tau, epsilon_bound, global)
    }

    /// Fits each leaf by a polynomial of degree `min(samples - 1, 6)`.
    pub fn from_table(samples: &[Vec<(C64, C64)>], tau: Vec<C64>, epsilon_bound: f64) -> Result<Self> {
        if samples.len() != tau.len() {
            return Err(Error::validation(format!(
                "{} tabulated leaves for {} transversal points",
                samples.len(),
                tau.len()
            )));
        }
        let mut fits = Vec::with_capacity(samples.len());
        for (k, leaf) in samples.iter().enumerate() {
            if leaf.is_empty() {
                return Err(Error::validation(format!("leaf {k} has no samples")));
            }
            if leaf.iter().any(|(z, w)| !(finite(*z) && finite(*w))) {
                return Err(Error::validation(format!("leaf {k} has non-finite samples")));
            }
            if leaf.iter().any(|(z, _)| z.norm() > 1.0) {
                return Err(Error::validation(format!("leaf {k} has samples outside the unit disk")));
            }
            fits.push(fit_polynomial(leaf, (leaf.len() - 1).min(MAX_FIT_DEGREE))?);
        }
        Self::checked(Leaves::Table(fits), tau, epsilon_bound, false)
    }

    fn checked(leaves: Leaves, tau: Vec<C64>, epsilon_bound: f64, global: bool) -> Result<Self> {
        if !(epsilon_bound > 0.0 && epsilon_bound < 1.0) {
            return Err(Error::validation(format!("epsilon_bound {epsilon_bound} must lie in (0, 1)")));
        }
        if tau.is_empty() {
            return Err(Error::validation("the transversal tau is empty"));
        }
        if tau.iter().any(|a| !finite(*a)) {
            return Err(Error::validation("tau contains non-finite points"));
        }
        Ok(Self { leaves, tau, epsilon_bound, global })
    }

    pub fn from_spec(spec: &MotionSpec) -> Result<Self> {
        let tau = to_c64s(&spec.tau);
        match (&spec.formula, &spec.leaves) {
            (Some(f), None) => Self::from_formula(Expr::parse(f)?, tau, spec.epsilon_bound, spec.global),
            (None, Some(leaves)) => {
                if spec.global {
                    return Err(Error::validation("tabulated motions cannot be global"));
                }
                let samples: Vec<Vec<(C64, C64)>> =
                    leaves.iter().map(|l| l.iter().map(|[z, w]| ((*z).into(), (*w).into())).collect()).collect();
                Self::from_table(&samples, tau, spec.epsilon_bound)
            }
            _ => Err(Error::validation("a motion needs exactly one of `formula` and `leaves`")),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_spec(&serde_json::from_str(text)?)
    }

    /// JSON form. Tabulated motions are written as samples of their fits.
    pub fn to_spec(&self) -> MotionSpec {
        let (formula, leaves) = match &self.leaves {
            Leaves::Formula(e) => (Some(e.to_string()), None),
            Leaves::Table(fits) => {
                let zs = disk_samples(4, 8, 1.0);
                let rows = fits
                    .iter()
                    .map(|c| zs.iter().map(|&z| [z.into(), horner(c, z).into()]).collect())
                    .collect();
                (None, Some(rows))
            }
        };
        MotionSpec { formula, leaves, tau: from_c64s(&self.tau), epsilon_bound: self.epsilon_bound, global: self.global }
    }

    /// Built-in family by name with the default transversal and margin 0.1.
    pub fn builtin(name: &str) -> Result<Self> {
        let formula = BUILTIN_FAMILIES
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, f)| *f)
            .ok_or_else(|| Error::validation(format!("unknown built-in family {name:?}")))?;
        let tau = BUILTIN_TAU.iter().map(|[re, im]| C64::new(*re, *im)).collect();
        Self::from_formula(Expr::parse(formula)?, tau, 0.1, true)
    }

    pub fn builtins() -> Vec<(&'static str, Self)> {
        BUILTIN_FAMILIES.iter().map(|(n, _)| (*n, Self::builtin(n).expect("built-in family"))).collect()
    }

    pub fn with_tau(mut self, tau: Vec<C64>) -> Result<Self> {
        if matches!(self.leaves, Leaves::Table(_)) {
            return Err(Error::validation("the transversal of a tabulated motion is fixed"));
        }
        self.tau = tau;
        Self::checked(self.leaves, self.tau, self.epsilon_bound, self.global)
    }

    pub fn tau(&self) -> &[C64] {
        &self.tau
    }

    pub fn epsilon_bound(&self) -> f64 {
        self.epsilon_bound
    }

    pub fn is_global(&self) -> bool {
        self.global
    }

    pub fn formula(&self) -> Option<&Expr> {
        match &self.leaves {
            Leaves::Formula(e) => Some(e),
            Leaves::Table(_) => None,
        }
    }

    /// `phi_alpha(z)`. Tabulated motions only know the leaves through `tau`.
    pub fn phi(&self, alpha: C64, z: C64) -> Result<C64> {
        match &self.leaves {
            Leaves::Formula(e) => Ok(e.eval(alpha, z)?),
            Leaves::Table(fits) => {
                let k = self
                    .tau
                    .iter()
                    .position(|&a| a == alpha)
                    .ok_or_else(|| Error::domain(format!("{alpha} is not a tabulated leaf")))?;
                Ok(horner(&fits[k], z))
            }
        }
    }

    /// The leaf through `tau[k]` at `z`.
    pub fn leaf(&self, k: usize, z: C64) -> Result<C64> {
        match &self.leaves {
            Leaves::Formula(e) => Ok(e.eval(self.tau[k], z)?),
            Leaves::Table(fits) => Ok(horner(&fits[k], z)),
        }
    }

    /// `d phi_alpha / dz`; exact for tabulated leaves, a complex central
    /// difference for formulas.
    pub fn leaf_slope(&self, alpha: C64, z: C64) -> Result<C64> {
        match &self.leaves {
            Leaves::Formula(e) => {
                const STEP: f64 = 1e-5;
                let d = C64::new(STEP, 0.0);
                Ok((e.eval(alpha, z + d)? - e.eval(alpha, z - d)?) / (2.0 * STEP))
            }
            Leaves::Table(fits) => {
                let k = self
                    .tau
                    .iter()
                    .position(|&a| a == alpha)
                    .ok_or_else(|| Error::domain(format!("{alpha} is not a tabulated leaf")))?;
                Ok(horner_derivative(&fits[k], z))
            }
        }
    }

    /// Numerical holomorphy check of the leaves on `tau` and the given `z`.
    pub fn holomorphy(&self, z_samples: &[C64]) -> HolomorphyReport {
        match &self.leaves {
            Leaves::Formula(e) => check_leaf_holomorphy(e, &self.tau, z_samples),
            // Polynomials in z are holomorphic by construction.
            Leaves::Table(_) => HolomorphyReport {
                passed: true,
                max_dzbar: 0.0,
                worst: None,
                evaluation_failures: 0,
                samples: self.tau.len() * z_samples.len(),
            },
        }
    }

    /// Wirtinger derivatives `(d/dalpha, d/dalpha-bar)` of `alpha -> phi_alpha(z)`
    /// by central differences.
    pub fn fiber_wirtinger(&self, alpha: C64, z: C64, step: f64) -> Result<(C64, C64)> {
        let f = |d: C64| self.phi(alpha + d, z);
        let fx = (f(C64::new(step, 0.0))? - f(C64::new(-step, 0.0))?) / (2.0 * step);
        let fy = (f(C64::new(0.0, step))? - f(C64::new(0.0, -step))?) / (2.0 * step);
        let i = C64::new(0.0, 1.0);
        Ok(((fx - i * fy) * 0.5, (fx + i * fy) * 0.5))
    }

    /// The leaf label `alpha` with `phi_alpha(z) = w`, by Newton's method on
    /// the real-linear fiber map. Global motions only.
    pub fn invert_fiber(&self, z: C64, w: C64) -> Result<C64> {
        if !self.global {
            return Err(Error::domain(format!("{w} at z = {z} lies on no known leaf of a non-global motion")));
        }
        let tol = 1e-13 * (1.0 + w.norm());
        let mut alpha = w;
        let mut r = self.phi(alpha, z)? - w;
        for _ in 0..60 {
            if r.norm() <= tol {
                return Ok(alpha);
            }
            let (a, b) = self.fiber_wirtinger(alpha, z, 1e-6)?;
            let det = a.norm_sqr() - b.norm_sqr();
            if det.abs() < 1e-300 {
                return Err(Error::Degenerate { re: w.re, im: w.im, reason: format!("fiber map singular at z = {z}") });
            }
            let step = (a.conj() * r - b * r.conj()) / det;
            let mut t = 1.0;
            loop {
                let cand = alpha - step * t;
                let rc = self.phi(cand, z).map(|v| v - w);
                if let Ok(rc) = rc {
                    if rc.norm() < r.norm() || t < 1e-6 {
                        alpha = cand;
                        r = rc;
                        break;
                    }
                }
                t *= 0.5;
                if t < 1e-6 {
                    return Err(Error::domain(format!("no leaf found through {w} at z = {z}")));
                }
            }
        }
        if r.norm() <= 1e3 * tol {
            Ok(alpha)
        } else {
            Err(Error::domain(format!("no leaf found through {w} at z = {z} (residual {:e})", r.norm())))
        }
    }

    /// The motion over `D(0, r)` pulled back to the unit disk:
    /// `phi_alpha(r z)`.
    pub fn rescale_base(&self, r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::validation(format!("radius {r} must lie in (0, 1)")));
        }
        let leaves = match &self.leaves {
            Leaves::Formula(e) => Leaves::Formula(e.scale_z(r)),
            Leaves::Table(fits) => Leaves::Table(
                fits.iter().map(|c| c.iter().enumerate().map(|(k, &a)| a * r.powi(k as i32)).collect()).collect(),
            ),
        };
        Ok(Self { leaves, tau: self.tau.clone(), epsilon_bound: self.epsilon_bound, global: self.global })
    }
}

fn finite(c: C64) -> bool {
    c.re.is_finite() && c.im.is_finite()
}

fn horner(c: &[C64], z: C64) -> C64 {
    c.iter().rev().fold(C64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

fn horner_derivative(c: &[C64], z: C64) -> C64 {
    c.iter().enumerate().skip(1).rev().fold(C64::new(0.0, 0.0), |acc, (k, &a)| acc * z + a * k as f64)
}

/// Least-squares polynomial of the given degree through `(z, w)` samples,
/// via the normal equations (degree is at most 6 on the unit disk).
fn fit_polynomial(samples: &[(C64, C64)], degree: usize) -> Result<Vec<C64>> {
    let m = degree + 1;
    let mut a = vec![vec![C64::new(0.0, 0.0); m + 1]; m];
    for &(z, w) in samples {
        let powers: Vec<C64> = (0..m).map(|k| z.powu(k as u32)).collect();
        for r in 0..m {
            for c in 0..m {
                a[r][c] += powers[r].conj() * powers[c];
            }
            a[r][m] += powers[r].conj() * w;
        }
    }
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm()))
            .expect("nonempty");
        if a[pivot][col].norm() < 1e-12 {
            return Err(Error::validation("leaf samples do not determine a polynomial; use distinct z values"));
        }
        a.swap(col, pivot);
        for r in 0..m {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=m {
                    let v = a[col][c];
                    a[r][c] -= f * v;
                }
            }
        }
    }
    Ok((0..m).map(|k| a[k][m] / a[k][k]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_evaluate() {
        let m = HolomorphicMotion::builtin("shear").unwrap();
        let v = m.phi(C64::new(0.3, 0.0), C64::new(0.0, 0.5)).unwrap();
        assert!((v - C64::new(0.3, 0.15)).norm() < 1e-15);
        assert_eq!(HolomorphicMotion::builtins().len(), 5);
        assert!(HolomorphicMotion::builtin("spiral").is_err());
    }

    #[test]
    fn shear_fiber_inverse_is_closed_form() {
        let m = HolomorphicMotion::builtin("shear").unwrap();
        let z = C64::new(0.3, -0.4);
        for w in [C64::new(0.2, 0.1), C64::new(-1.5, 0.7), C64::new(0.0, 0.0)] {
            let a = m.invert_fiber(z, w).unwrap();
            let exact = (w - z * w.conj()) / (1.0 - z.norm_sqr());
            assert!((a - exact).norm() < 1e-12, "{a} vs {exact}");
        }
    }

    #[test]
    fn table_fit_recovers_polynomial_leaves() {
        let tau = vec![C64::new(0.1, 0.0), C64::new(-0.2, 0.1)];
        let leaf = |a: C64, z: C64| a + z * a.conj() * 0.5 + z * z * 0.1;
        let zs = disk_samples(5, 9, 0.95);
        let samples: Vec<Vec<(C64, C64)>> = tau.iter().map(|&a| zs.iter().map(|&z| (z, leaf(a, z))).collect()).collect();
        let m = HolomorphicMotion::from_table(&samples, tau.clone(), 0.2).unwrap();
        let z = C64::new(0.31, 0.2);
        for (k, &a) in tau.iter().enumerate() {
            assert!((m.leaf(k, z).unwrap() - leaf(a, z)).norm() < 1e-12);
            let slope = m.leaf_slope(a, z).unwrap();
            assert!((slope - (a.conj() * 0.5 + z * 0.2)).norm() < 1e-12);
        }
        assert!(m.phi(C64::new(0.5, 0.0), z).is_err());
        assert!(m.invert_fiber(z, C64::new(0.1, 0.0)).is_err());
    }

    #[test]
    fn spec_round_trip_and_validation() {
        let json = r#"{"formula": "alpha + z*conj(alpha)", "tau": [[0.3, 0], [0, 0.1]], "epsilon_bound": 0.2, "global": true}"#;
        let m = HolomorphicMotion::from_json(json).unwrap();
        let again = HolomorphicMotion::from_spec(&m.to_spec()).unwrap();
        assert_eq!(again.formula(), m.formula());
        assert!(HolomorphicMotion::from_json(r#"{"formula": "z", "tau": [0.1], "epsilon_bound": 0.2, "colour": 1}"#).is_err());
        assert!(HolomorphicMotion::from_json(r#"{"tau": [0.1], "epsilon_bound": 0.2}"#).is_err());
        assert!(HolomorphicMotion::from_json(r#"{"formula": "z", "tau": [0.1], "epsilon_bound": 1.5}"#).is_err());
        assert!(HolomorphicMotion::from_json(r#"{"formula": "w", "tau": [0.1], "epsilon_bound": 0.5}"#).is_err());
    }

    #[test]
    fn rescaling_composes_with_evaluation() {
        let m = HolomorphicMotion::builtin("exp-shear").unwrap();
        let r = m.rescale_base(0.1).unwrap();
        let (a, z) = (C64::new(0.2, -0.1), C64::new(0.5, 0.5));
        assert!((r.phi(a, z).unwrap() - m.phi(a, z * 0.1).unwrap()).norm() < 1e-15);
        assert!(m.rescale_base(1.0).is_err());
    }
}
