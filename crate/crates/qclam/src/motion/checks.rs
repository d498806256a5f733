use serde::Serialize;

use super::{mu_at, HolomorphicMotion};
use crate::error::{Error, Result};
use crate::C64;

/// Estimator slack allowed above `|z|` in the Schwarz bound.
pub const SCHWARZ_SLACK: f64 = 5e-2;
/// Slack on the Harnack margins.
pub const HARNACK_SLACK: f64 = 1e-9;
/// Smallest leaf gap counted as disjoint.
pub const MIN_GAP: f64 = 1e-9;

/// Polar samples: the origin plus `n_r` radii up to `r_max`, each with
/// `n_theta` angles (offset by half a step on alternate rings).
pub fn disk_samples(n_r: usize, n_theta: usize, r_max: f64) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0)];
    for a in 1..=n_r {
        let r = r_max * a as f64 / n_r as f64;
        let shift = if a % 2 == 0 { 0.5 } else { 0.0 };
        for b in 0..n_theta {
            let t = std::f64::consts::TAU * (b as f64 + shift) / n_theta as f64;
            out.push(C64::from_polar(r, t));
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct DisjointnessReport {
    /// `None` for a single leaf.
    pub min_gap: Option<f64>,
    /// Leaf indices and base point attaining the minimum.
    pub witness: Option<(usize, usize, [f64; 2])>,
    pub passed: bool,
}

/// Smallest distance between distinct leaves over the sampled base points.
pub fn check_disjointness(m: &HolomorphicMotion, z_samples: &[C64]) -> Result<DisjointnessReport> {
    let mut min: Option<f64> = None;
    let mut witness = None;
    for &z in z_samples {
        let vals: Vec<C64> = (0..m.tau().len()).map(|k| m.leaf(k, z)).collect::<Result<_>>()?;
        for i in 0..vals.len() {
            for j in i + 1..vals.len() {
                let gap = (vals[i] - vals[j]).norm();
                if min.map_or(true, |g| gap < g) {
                    min = Some(gap);
                    witness = Some((i, j, [z.re, z.im]));
                }
            }
        }
    }
    Ok(DisjointnessReport { min_gap: min, witness, passed: min.map_or(true, |g| g > MIN_GAP) })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundednessReport {
    pub sup_abs: f64,
    pub bound: f64,
    pub passed: bool,
}

/// `sup |phi_alpha(z)|` over `tau` and the samples against `1 - epsilon_bound`.
pub fn check_boundedness(m: &HolomorphicMotion, z_samples: &[C64]) -> Result<BoundednessReport> {
    let mut sup = 0.0f64;
    for &z in z_samples {
        for k in 0..m.tau().len() {
            sup = sup.max(m.leaf(k, z)?.norm());
        }
    }
    let bound = 1.0 - m.epsilon_bound();
    Ok(BoundednessReport { sup_abs: sup, bound, passed: sup <= bound })
}

/// The two-sided Holder estimate obtained from Harnack's inequality for
/// `-log(|phi_alpha - phi_beta| / 2)`.
#[derive(Clone, Debug, Serialize)]
pub struct HarnackReport {
    pub z: [f64; 2],
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
    pub passed: bool,
}

/// Evaluates
/// `2^(-2s/(1-s)) d0^((1+s)/(1-s)) <= |phi_a(z) - phi_b(z)| <= 2^(2s/(1+s)) d0^((1-s)/(1+s))`
/// with `s = |z|` and `d0 = |phi_a(0) - phi_b(0)|` for leaves `i`, `j`.
pub fn check_harnack_hoelder(m: &HolomorphicMotion, i: usize, j: usize, z: C64) -> Result<HarnackReport> {
    let n = m.tau().len();
    if i >= n || j >= n {
        return Err(Error::validation(format!("leaf index out of range (have {n} leaves)")));
    }
    let s = z.norm();
    if !(s < 1.0) {
        return Err(Error::validation(format!("|z| = {s} must be below 1")));
    }
    let zero = C64::new(0.0, 0.0);
    let d0 = (m.leaf(i, zero)? - m.leaf(j, zero)?).norm();
    if d0 == 0.0 {
        return Err(Error::validation(format!("leaves {i} and {j} coincide at z = 0")));
    }
    let middle = (m.leaf(i, z)? - m.leaf(j, z)?).norm();
    let (p, q) = ((1.0 + s) / (1.0 - s), (1.0 - s) / (1.0 + s));
    let lower = 2f64.powf(-2.0 * s / (1.0 - s)) * d0.powf(p);
    let upper = 2f64.powf(2.0 * s / (1.0 + s)) * d0.powf(q);
    let (lower_margin, upper_margin) = (middle - lower, upper - middle);
    Ok(HarnackReport {
        z: [z.re, z.im],
        lower,
        middle,
        upper,
        lower_margin,
        upper_margin,
        passed: lower_margin >= -HARNACK_SLACK && upper_margin >= -HARNACK_SLACK,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HarnackSweep {
    pub checks: usize,
    pub violations: usize,
    pub min_lower_margin: f64,
    pub min_upper_margin: f64,
    pub passed: bool,
}

/// All leaf pairs over a polar `n_r x n_theta` grid of `|z| <= r_max`.
pub fn harnack_sweep(m: &HolomorphicMotion, n_r: usize, n_theta: usize, r_max: f64) -> Result<HarnackSweep> {
    let mut out =
        HarnackSweep { checks: 0, violations: 0, min_lower_margin: f64::INFINITY, min_upper_margin: f64::INFINITY, passed: true };
    let n = m.tau().len();
    for a in 1..=n_r {
        let r = r_max * a as f64 / n_r as f64;
        for b in 0..n_theta {
            let z = C64::from_polar(r, std::f64::consts::TAU * b as f64 / n_theta as f64);
            for i in 0..n {
                for j in i + 1..n {
                    let rep = check_harnack_hoelder(m, i, j, z)?;
                    out.checks += 1;
                    out.violations += usize::from(!rep.passed);
                    out.min_lower_margin = out.min_lower_margin.min(rep.lower_margin);
                    out.min_upper_margin = out.min_upper_margin.min(rep.upper_margin);
                }
            }
        }
    }
    out.passed = out.violations == 0;
    Ok(out)
}

/// Measured Holder exponent of the holonomy `h_{0,z}` against the bounds
/// `(1-s)/(1+s)` and `(1+s)/(1-s)`.
#[derive(Clone, Debug, Serialize)]
pub struct HolderReport {
    pub min_exponent: f64,
    pub max_exponent: f64,
    pub lower: f64,
    pub upper: f64,
    pub within: bool,
}

/// Log-log slope of `|phi_a(z) - phi_b(z)|` against `|phi_a(0) - phi_b(0)|`.
///
/// Global motions probe pairs `(alpha, alpha + t e)` around every point of
/// `tau` with `t` from 1e-2 down to 1e-4 and `e` in {1, i}; each probe gives
/// one slope. Tabulated motions regress over all pairs in `tau`.
pub fn holder_exponent(m: &HolomorphicMotion, z: C64) -> Result<HolderReport> {
    let s = z.norm();
    if !(s < 1.0) {
        return Err(Error::validation(format!("|z| = {s} must be below 1")));
    }
    let zero = C64::new(0.0, 0.0);
    let mut slopes = Vec::new();
    if m.is_global() {
        for &a in m.tau() {
            for e in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
                let pts: Vec<(f64, f64)> = [1e-2, 1e-3, 1e-4]
                    .iter()
                    .map(|&t| {
                        let b = a + e * t;
                        let d0 = (m.phi(a, zero)? - m.phi(b, zero)?).norm();
                        let d = (m.phi(a, z)? - m.phi(b, z)?).norm();
                        Ok((d0.ln(), d.ln()))
                    })
                    .collect::<Result<_>>()?;
                slopes.push(ls_slope(&pts));
            }
        }
    } else {
        let n = m.tau().len();
        let mut pts = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let d0 = (m.leaf(i, zero)? - m.leaf(j, zero)?).norm();
                let d = (m.leaf(i, z)? - m.leaf(j, z)?).norm();
                pts.push((d0.ln(), d.ln()));
            }
        }
        let spread = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max)
            - pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        if pts.len() < 2 || !(spread > 1e-6) {
            return Err(Error::validation("need leaf pairs at several distances to measure an exponent"));
        }
        slopes.push(ls_slope(&pts));
    }
    if slopes.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate { re: z.re, im: z.im, reason: "coincident leaves in exponent probe".into() });
    }
    let min_exponent = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    let max_exponent = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lower, upper) = ((1.0 - s) / (1.0 + s), (1.0 + s) / (1.0 - s));
    Ok(HolderReport {
        min_exponent,
        max_exponent,
        lower,
        upper,
        within: min_exponent >= lower - 1e-9 && max_exponent <= upper + 1e-9,
    })
}

fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, Serialize)]
pub struct SchwarzFiber {
    pub z: [f64; 2],
    pub sup_mu: f64,
    /// `|z| - sup |mu^z|`; never below `-SCHWARZ_SLACK` when the check passes.
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SchwarzReport {
    pub fibers: Vec<SchwarzFiber>,
    pub worst_margin: f64,
    pub passed: bool,
}

/// `sup_w |mu^z(w)| <= |z|` over sampled fibers and points of the source
/// fiber. Global motions only.
pub fn check_schwarz(m: &HolomorphicMotion, z_samples: &[C64], w_samples: &[C64]) -> Result<SchwarzReport> {
    let mut fibers = Vec::with_capacity(z_samples.len());
    for &z in z_samples {
        let mut sup = 0.0f64;
        for &w in w_samples {
            sup = sup.max(mu_at(m, z, w)?.norm());
        }
        fibers.push(SchwarzFiber { z: [z.re, z.im], sup_mu: sup, margin: z.norm() - sup });
    }
    let worst_margin = fibers.iter().map(|f| f.margin).fold(f64::INFINITY, f64::min);
    Ok(SchwarzReport { passed: fibers.iter().all(|f| f.margin >= -SCHWARZ_SLACK), fibers, worst_margin })
}
