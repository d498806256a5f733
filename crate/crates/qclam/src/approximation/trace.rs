use std::io::Write;

use serde::Serialize;

use super::MollifiedLamination;
use crate::beltrami::p_max;
use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::lamination::{LeafFunction, LeafGrid, Smoothness, StraightenedFunction};
use crate::C64;

/// Derivatives below this modulus make a sample degenerate.
pub const FLAG_BELOW: f64 = 1e-9;

/// `f_eps(z, w) = g(z, alpha_eps(z, w))` where `alpha_eps` labels the leaf of
/// the mollified lamination through `(z, w)`.
pub struct Approximant<'a> {
    pub g: &'a dyn StraightenedFunction,
    pub lam: &'a MollifiedLamination,
}

impl Approximant<'_> {
    pub fn eval(&self, z: C64, w: C64) -> Result<f64> {
        self.g.value(z, self.lam.invert(z, w)?)
    }
}

/// `f` and `f_eps` sampled along the reference leaves: node `z` of leaf `k`
/// is the point `(z, h_0(z, tau_k))`.
#[derive(Clone, Debug)]
pub struct ApproxTable {
    pub epsilon: f64,
    pub grid: LeafGrid,
    pub tau: Vec<C64>,
    pub exact: Vec<Vec<f64>>,
    pub approx: Vec<Vec<f64>>,
    /// Label `alpha_eps` of the mollified leaf through each sample.
    pub labels: Vec<Vec<C64>>,
    /// `1 + |d h_0 / dz|^2`.
    pub stretch: Vec<Vec<f64>>,
}

pub fn approximate(
    g: &dyn StraightenedFunction,
    reference: &MollifiedLamination,
    moll: &MollifiedLamination,
    grid: &LeafGrid,
) -> Result<ApproxTable> {
    let tau = reference.tau().to_vec();
    let f = Approximant { g, lam: moll };
    let (mut exact, mut approx, mut labels, mut stretch) = (vec![], vec![], vec![], vec![]);
    for &a in &tau {
        let (mut e, mut ap, mut l, mut s) = (vec![], vec![], vec![], vec![]);
        for z in grid.points() {
            let w = reference.h(z, a)?;
            let label = moll.invert(z, w)?;
            e.push(g.value(z, a)?);
            ap.push(f.g.value(z, label)?);
            l.push(label);
            s.push(1.0 + reference.h_z(z, a)?.norm_sqr());
        }
        exact.push(e);
        approx.push(ap);
        labels.push(l);
        stretch.push(s);
    }
    Ok(ApproxTable { epsilon: moll.epsilon(), grid: grid.clone(), tau, exact, approx, labels, stretch })
}

impl ApproxTable {
    /// `f_eps - f` as a leaf function, gradients by central differences on the grid.
    pub fn error_function(&self) -> Result<LeafFunction<f64>> {
        let values: Vec<Vec<f64>> =
            self.approx.iter().zip(&self.exact).map(|(a, e)| a.iter().zip(e).map(|(x, y)| x - y).collect()).collect();
        let mut gradients = Vec::with_capacity(values.len());
        for v in &values {
            gradients.push(self.grid.gradient(v).into_iter().map(|g| g.unwrap_or([0.0, 0.0])).collect());
        }
        LeafFunction::new(self.grid.clone(), self.tau.clone(), values, gradients, self.stretch.clone(), Smoothness::Sobolev)
    }

    /// `sup |f_eps - f|` over `|z| <= radius`.
    pub fn sup_error(&self, radius: f64) -> f64 {
        let mut sup: f64 = 0.0;
        for (a, e) in self.approx.iter().zip(&self.exact) {
            for n in 0..self.grid.len() {
                if self.grid.point(n).norm() <= radius * (1.0 + 1e-12) {
                    sup = sup.max((a[n] - e[n]).abs());
                }
            }
        }
        sup
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["leaf", "z_re", "z_im", "f", "f_eps", "alpha_eps_re", "alpha_eps_im"])
            .map_err(csv_err)?;
        for k in 0..self.tau.len() {
            for n in 0..self.grid.len() {
                let z = self.grid.point(n);
                w.write_record([
                    k.to_string(),
                    z.re.to_string(),
                    z.im.to_string(),
                    self.exact[k][n].to_string(),
                    self.approx[k][n].to_string(),
                    self.labels[k][n].re.to_string(),
                    self.labels[k][n].im.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Leafwise `W^{1,p}` error of an approximation.
#[derive(Clone, Debug, Serialize)]
pub struct W1pError {
    pub per_leaf: Vec<f64>,
    pub total: f64,
    /// Set when `p >= p_max(kappa)`: outside the range where convergence is expected.
    pub out_of_regime: bool,
}

/// `sup |f_eps - f| + (int |grad_L (f_eps - f)|^p dA_L)^(1/p)` over
/// `D(0, 1 - delta)`, per leaf and as the maximum over leaves.
pub fn w1p_error(table: &ApproxTable, p: f64, delta: f64, kappa: f64) -> Result<W1pError> {
    let err = table.error_function()?;
    let total = crate::lamination::w1p_norm(&err, p, delta)?;
    let out_of_regime = p >= p_max(kappa)?;
    let r = (1.0 - delta) * (1.0 + 1e-12);
    let area = table.grid.step() * table.grid.step();
    let inside: Vec<usize> = (0..table.grid.len()).filter(|&n| table.grid.point(n).norm() <= r).collect();
    let per_leaf = (0..table.tau.len())
        .map(|k| {
            let v = err.values(k);
            let (g, s) = (err.gradients(k), err.stretch(k));
            let sup = inside.iter().map(|&n| v[n].abs()).fold(0.0, f64::max);
            let terms: Vec<f64> = inside
                .iter()
                .map(|&n| (g[n][0].hypot(g[n][1])).powf(p) * s[n].powf(1.0 - p / 2.0) * area)
                .collect();
            sup + crate::scalar::pairwise_sum(&terms).powf(1.0 / p)
        })
        .collect();
    Ok(W1pError { per_leaf, total, out_of_regime })
}

/// The holonomy `pi(z) = alpha_eps(z, h_0(z, alpha0)) - alpha0` of the
/// mollified lamination read along one reference leaf.
#[derive(Clone, Debug)]
pub struct ProjectionTrace {
    pub alpha: C64,
    pub grid: LeafGrid,
    pub pi: Vec<C64>,
    /// `(d pi, dbar pi)` where the grid stencil fits.
    pub derivatives: Vec<Option<(C64, C64)>>,
}

/// Summary of `nu = dbar pi / d pi` over a disk.
#[derive(Clone, Debug, Serialize)]
pub struct NuSummary {
    pub sup: f64,
    /// Fraction of non-flagged samples with `|nu| <= kappa + slack`.
    pub within: f64,
    pub samples: usize,
    pub flagged: Vec<[f64; 2]>,
}

pub fn projection_trace(
    moll: &MollifiedLamination,
    reference: &MollifiedLamination,
    alpha0: C64,
    grid: &LeafGrid,
) -> Result<ProjectionTrace> {
    let pi = grid
        .points()
        .map(|z| Ok(moll.invert(z, reference.h(z, alpha0)?)? - alpha0))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProjectionTrace::from_samples(alpha0, grid.clone(), pi))
}

impl ProjectionTrace {
    pub fn from_samples(alpha: C64, grid: LeafGrid, pi: Vec<C64>) -> Self {
        let re: Vec<f64> = pi.iter().map(|v| v.re).collect();
        let im: Vec<f64> = pi.iter().map(|v| v.im).collect();
        let (gr, gi) = (grid.gradient(&re), grid.gradient(&im));
        let i = C64::new(0.0, 1.0);
        let derivatives = gr
            .into_iter()
            .zip(gi)
            .map(|(a, b)| {
                let (a, b) = (a?, b?);
                let (px, py) = (C64::new(a[0], b[0]), C64::new(a[1], b[1]));
                Some(((px - i * py) * 0.5, (px + i * py) * 0.5))
            })
            .collect();
        Self { alpha, grid, pi, derivatives }
    }

    /// Statistics of `|nu|` over `|z| <= radius`; samples with
    /// `|d pi| < FLAG_BELOW` are flagged and excluded.
    pub fn nu_summary(&self, radius: f64, kappa: f64, slack: f64) -> NuSummary {
        let (mut sup, mut good, mut count) = (0.0f64, 0usize, 0usize);
        let mut flagged = Vec::new();
        for (n, d) in self.derivatives.iter().enumerate() {
            let z = self.grid.point(n);
            let Some((d, dbar)) = d else { continue };
            if z.norm() > radius * (1.0 + 1e-12) {
                continue;
            }
            if d.norm() < FLAG_BELOW {
                flagged.push([z.re, z.im]);
                continue;
            }
            let nu = (dbar / d).norm();
            sup = sup.max(nu);
            count += 1;
            if nu <= kappa + slack {
                good += 1;
            }
        }
        let within = if count == 0 { 1.0 } else { good as f64 / count as f64 };
        NuSummary { sup, within, samples: count, flagged }
    }

    /// `(int_{|z| <= radius} |grad pi|^p dA)^(1/p)` with `|grad pi| = |d pi| + |dbar pi|`.
    pub fn grad_lp(&self, p: f64, radius: f64) -> f64 {
        let area = self.grid.step() * self.grid.step();
        let terms: Vec<f64> = self
            .derivatives
            .iter()
            .enumerate()
            .filter(|(n, _)| self.grid.point(*n).norm() <= radius * (1.0 + 1e-12))
            .filter_map(|(_, d)| d.map(|(a, b)| (a.norm() + b.norm()).powf(p) * area))
            .collect();
        crate::scalar::pairwise_sum(&terms).powf(1.0 / p)
    }
}

/// A complex line crossing the lamination.
#[derive(Clone, Debug)]
pub enum Transversal {
    /// The fiber `{z} x C`, parametrized by `w = s`.
    Vertical { z: C64 },
    /// The graph `w = g(z)`, parametrized by `z = s`; `g` is an expression in `z`.
    Graph { g: Expr },
}

impl Transversal {
    pub fn graph(g: Expr) -> Result<Self> {
        if g.mentions(Var::W) || g.mentions(Var::Alpha) {
            return Err(Error::validation("a transversal graph must be a function of z alone"));
        }
        Ok(Transversal::Graph { g })
    }

    fn point(&self, s: C64) -> Result<(C64, C64)> {
        match self {
            Transversal::Vertical { z } => Ok((*z, s)),
            Transversal::Graph { g } => Ok((s, g.eval(C64::new(0.0, 0.0), s)?)),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DilatationReport {
    pub sup: f64,
    pub values: Vec<f64>,
    pub flagged: Vec<[f64; 2]>,
}

const TRANSVERSAL_STEP: f64 = 1e-4;

// Point of `d2` on the leaf through the point of `d1` with parameter `s`.
fn transport(moll: &MollifiedLamination, d1: &Transversal, d2: &Transversal, s: C64) -> Result<C64> {
    let (z1, w1) = d1.point(s)?;
    let alpha = moll.invert(z1, w1)?;
    match d2 {
        Transversal::Vertical { z } => moll.h(*z, alpha),
        Transversal::Graph { g } => {
            let zero = C64::new(0.0, 0.0);
            let mut z = z1;
            for _ in 0..50 {
                let f = moll.h(z, alpha)? - g.eval(zero, z)?;
                if f.norm() <= 1e-13 {
                    return Ok(z);
                }
                let e = 1e-6;
                let gp = (g.eval(zero, z + e)? - g.eval(zero, z - e)?) / (2.0 * e);
                let fp = moll.h_z(z, alpha)? - gp;
                if fp.norm() < FLAG_BELOW {
                    return Err(Error::Degenerate { re: z.re, im: z.im, reason: "leaf is tangent to the transversal".into() });
                }
                z -= f / fp;
            }
            Err(Error::domain(format!("leaf through {alpha} does not meet the transversal graph")))
        }
    }
}

/// `sup |dbar H / d H|` of the holonomy `H: D1 -> D2` at the sample parameters.
pub fn transversal_dilatation(
    moll: &MollifiedLamination,
    d1: &Transversal,
    d2: &Transversal,
    samples: &[C64],
) -> Result<DilatationReport> {
    let (mut sup, mut values, mut flagged) = (0.0f64, Vec::new(), Vec::new());
    let e = TRANSVERSAL_STEP;
    let i = C64::new(0.0, 1.0);
    for &s in samples {
        let hx = (transport(moll, d1, d2, s + e)? - transport(moll, d1, d2, s - e)?) / (2.0 * e);
        let hy = (transport(moll, d1, d2, s + i * e)? - transport(moll, d1, d2, s - i * e)?) / (2.0 * e);
        let (d, dbar) = ((hx - i * hy) * 0.5, (hx + i * hy) * 0.5);
        if d.norm() < FLAG_BELOW {
            flagged.push([s.re, s.im]);
            continue;
        }
        let k = (dbar / d).norm();
        sup = sup.max(k);
        values.push(k);
    }
    Ok(DilatationReport { sup, values, flagged })
}
