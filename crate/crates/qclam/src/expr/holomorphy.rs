use num_complex::Complex;
use serde::Serialize;

use super::Expr;

type C64 = Complex<f64>;

/// Largest `|d/dzbar|` accepted as holomorphic.
pub const HOLOMORPHY_TOLERANCE: f64 = 1e-6;

// Central-difference step. The truncation error for a holomorphic function is
// about STEP^2 |f'''| / 3, rounding about 1e-16 |f| / STEP.
const STEP: f64 = 1e-5;

#[derive(Clone, Debug, Serialize)]
pub struct HolomorphyReport {
    pub passed: bool,
    pub max_dzbar: f64,
    /// Sample `(alpha, z)` attaining `max_dzbar`.
    pub worst: Option<[[f64; 2]; 2]>,
    /// Samples where the formula could not be evaluated.
    pub evaluation_failures: usize,
    pub samples: usize,
}

/// Estimates `d phi / d zbar` by central differences at every sample pair.
/// Evaluation failures count against the check.
pub fn check_leaf_holomorphy(e: &Expr, alpha_samples: &[C64], z_samples: &[C64]) -> HolomorphyReport {
    let mut max = 0.0f64;
    let mut worst = None;
    let mut failures = 0;
    for &alpha in alpha_samples {
        for &z in z_samples {
            match dzbar(e, alpha, z) {
                Some(d) => {
                    if d.norm() > max || worst.is_none() {
                        max = max.max(d.norm());
                        worst = Some([[alpha.re, alpha.im], [z.re, z.im]]);
                    }
                }
                None => failures += 1,
            }
        }
    }
    let samples = alpha_samples.len() * z_samples.len();
    HolomorphyReport {
        passed: failures == 0 && samples > 0 && max <= HOLOMORPHY_TOLERANCE,
        max_dzbar: max,
        worst,
        evaluation_failures: failures,
        samples,
    }
}

fn dzbar(e: &Expr, alpha: C64, z: C64) -> Option<C64> {
    let f = |dz: C64| e.eval(alpha, z + dz).ok();
    let fx = (f(C64::new(STEP, 0.0))? - f(C64::new(-STEP, 0.0))?) / (2.0 * STEP);
    let fy = (f(C64::new(0.0, STEP))? - f(C64::new(0.0, -STEP))?) / (2.0 * STEP);
    Some((fx + C64::i() * fy) * 0.5)
}
