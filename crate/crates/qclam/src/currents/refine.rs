use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::{TestForm, WeightedCurrent};
use crate::error::{Error, Result};
use crate::field_ops::Disk;
use crate::scalar::Real;
use crate::C64;

/// One step of the refinement: the selected ball, the renormalized current
/// and the bookkeeping that certifies the step.
#[derive(Clone, Debug, Serialize)]
pub struct RefinementStep {
    pub k: usize,
    pub center: [f64; 2],
    /// Diameter of the covering balls, below `10^-k`.
    pub ball_diameter: f64,
    /// Diameter of the set of leaves carrying weight.
    pub support_diameter: f64,
    pub mass: f64,
    pub pairing: f64,
    /// `max |sum_i theta_i - 1|` on the support of the previous current.
    pub partition_error: f64,
    /// `|sum_i <theta_i S, form> - <S, form>|`.
    pub splitting_error: f64,
    pub weights: Vec<f64>,
}

/// Repeatedly covers the support in `tau` by balls of diameter below
/// `10^-k`, splits the current with a partition of unity subordinate to the
/// cover (constant along leaves), keeps the piece pairing most positively
/// with `form` and rescales it to unit mass.
pub fn refine_subdivide<T: Real>(s: &WeightedCurrent<T>, form: &TestForm, depth: usize) -> Result<Vec<RefinementStep>> {
    if depth == 0 {
        return Err(Error::validation("refinement depth must be at least 1"));
    }
    let tau = s.base().lamination().tau().to_vec();
    let n = tau.len();
    let mut weights: Vec<f64> = s.base().weights().iter().map(|w| w.as_f64()).collect();
    // Unit-weight leaf pairings and masses; everything after is weight arithmetic.
    let mut pairings = vec![0.0; n];
    let mut masses = vec![0.0; n];
    for k in 0..n {
        if weights[k] > 0.0 {
            pairings[k] = s.leaf_pairing(k, form)?;
            masses[k] = s.leaf_mass(k, Disk::unit())?;
        }
    }
    let dot = |w: &[f64], v: &[f64]| crate::scalar::pairwise_sum(&w.iter().zip(v).map(|(a, b)| a * b).collect::<Vec<_>>());

    let mut steps = Vec::with_capacity(depth);
    for k in 1..=depth {
        let radius = 0.45 * 10f64.powi(-(k as i32));
        let spacing = 0.99 * std::f64::consts::SQRT_2 * radius;
        // theta values per ball (lattice index) and leaf.
        let mut balls: BTreeMap<(i64, i64), Vec<f64>> = BTreeMap::new();
        let mut partition_error: f64 = 0.0;
        for (j, &a) in tau.iter().enumerate() {
            if weights[j] <= 0.0 {
                continue;
            }
            let (cx, cy) = ((a.re / spacing).round() as i64, (a.im / spacing).round() as i64);
            let mut bumps = Vec::new();
            for m in cx - 2..=cx + 2 {
                for l in cy - 2..=cy + 2 {
                    let c = C64::new(m as f64 * spacing, l as f64 * spacing);
                    let psi = 1.0 - (a - c).norm() / radius;
                    if psi > 0.0 {
                        bumps.push(((m, l), psi));
                    }
                }
            }
            let total: f64 = bumps.iter().map(|b| b.1).sum();
            let mut check = 0.0;
            for (key, psi) in bumps {
                let theta = psi / total;
                check += theta;
                balls.entry(key).or_insert_with(|| vec![0.0; n])[j] = theta;
            }
            partition_error = partition_error.max((check - 1.0).abs());
        }
        let total_pairing = dot(&weights, &pairings);
        let mut split = Vec::with_capacity(balls.len());
        let mut best: Option<((i64, i64), f64)> = None;
        for (&key, theta) in &balls {
            let piece: Vec<f64> = theta.iter().zip(&weights).map(|(t, w)| t * w).collect();
            let p = dot(&piece, &pairings);
            split.push(p);
            if best.map_or(true, |b| p > b.1) {
                best = Some((key, p));
            }
        }
        let (key, best_pairing) = best.ok_or(Error::ContradictionWitness { step: k })?;
        if !(best_pairing > 0.0) {
            return Err(Error::ContradictionWitness { step: k });
        }
        let splitting_error = (crate::scalar::pairwise_sum(&split) - total_pairing).abs();
        let theta = &balls[&key];
        let piece: Vec<f64> = theta.iter().zip(&weights).map(|(t, w)| t * w).collect();
        let piece_mass = dot(&piece, &masses);
        weights = piece.iter().map(|w| w / piece_mass).collect();
        let support: Vec<C64> = tau.iter().zip(&weights).filter(|(_, &w)| w > 0.0).map(|(a, _)| *a).collect();
        let mut diameter: f64 = 0.0;
        for a in &support {
            for b in &support {
                diameter = diameter.max((a - b).norm());
            }
        }
        steps.push(RefinementStep {
            k,
            center: [key.0 as f64 * spacing, key.1 as f64 * spacing],
            ball_diameter: 2.0 * radius,
            support_diameter: diameter,
            mass: dot(&weights, &masses),
            pairing: dot(&weights, &pairings),
            partition_error,
            splitting_error,
            weights: weights.clone(),
        });
    }
    Ok(steps)
}

/// Trace rows `k,center_re,center_im,diameter,support_diameter,mass,pairing`.
pub fn write_trace_csv<W: Write>(steps: &[RefinementStep], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["k", "center_re", "center_im", "diameter", "support_diameter", "mass", "pairing"])
        .map_err(io)?;
    for s in steps {
        w.write_record(&[
            s.k.to_string(),
            s.center[0].to_string(),
            s.center[1].to_string(),
            s.ball_diameter.to_string(),
            s.support_diameter.to_string(),
            s.mass.to_string(),
            s.pairing.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
