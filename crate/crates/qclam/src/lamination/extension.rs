use std::f64::consts::TAU;
use std::sync::Arc;

use super::functions::StraightenedFunction;
use crate::error::{Error, Result};
use crate::C64;

const RINGS: usize = 8;
const SPOKES: usize = 16;

type Samples = Arc<dyn Fn(C64, usize) -> Result<f64> + Send + Sync>;

/// Extension of a function known on the leaves through a finite `tau` to
/// all labels `alpha`: an inverse-square-distance blend of the leaf values,
/// then averaged over `alpha` with the bump `(1 - |s|^2)^2` of the given
/// radius.
///
/// The blend is linear in the data and reproduces it on `tau`; it is
/// continuous in `alpha` but not differentiable there, which the averaging
/// repairs at the cost of an error of order `smoothing` on `tau`.
#[derive(Clone)]
pub struct C1Extension {
    tau: Vec<C64>,
    samples: Samples,
    smoothing: f64,
    quadrature: Vec<(C64, f64)>,
}

impl std::fmt::Debug for C1Extension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("C1Extension").field("tau", &self.tau).field("smoothing", &self.smoothing).finish()
    }
}

/// `f(z, k)` is the value at `z` on the leaf through `tau[k]`.
pub fn c1_extend(
    tau: Vec<C64>,
    f: impl Fn(C64, usize) -> Result<f64> + Send + Sync + 'static,
    smoothing: f64,
) -> Result<C1Extension> {
    if !(smoothing > 0.0 && smoothing.is_finite()) {
        return Err(Error::validation(format!("smoothing radius {smoothing} must be positive")));
    }
    if tau.is_empty() {
        return Err(Error::validation("extension needs at least one leaf"));
    }
    let mut quadrature = Vec::with_capacity(RINGS * SPOKES);
    for a in 0..RINGS {
        let r = (a as f64 + 0.5) / RINGS as f64;
        let w = (1.0 - r * r).powi(2) * r;
        for b in 0..SPOKES {
            let t = TAU * (b as f64 + 0.5 * (a % 2) as f64) / SPOKES as f64;
            quadrature.push((C64::from_polar(r * smoothing, t), w));
        }
    }
    let total: f64 = quadrature.iter().map(|q| q.1).sum();
    quadrature.iter_mut().for_each(|q| q.1 /= total);
    Ok(C1Extension { tau, samples: Arc::new(f), smoothing, quadrature })
}

impl C1Extension {
    pub fn tau(&self) -> &[C64] {
        &self.tau
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    /// The blend before averaging; equals the data on `tau`.
    pub fn blend(&self, z: C64, alpha: C64) -> Result<f64> {
        if let Some(k) = self.tau.iter().position(|&t| t == alpha) {
            return (self.samples)(z, k);
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for (k, &t) in self.tau.iter().enumerate() {
            let w = 1.0 / (alpha - t).norm_sqr();
            num += w * (self.samples)(z, k)?;
            den += w;
        }
        Ok(num / den)
    }
}

impl StraightenedFunction for C1Extension {
    fn value(&self, z: C64, alpha: C64) -> Result<f64> {
        // Sample values are shared by every quadrature node.
        let vals = (0..self.tau.len()).map(|k| (self.samples)(z, k)).collect::<Result<Vec<_>>>()?;
        let mut acc = 0.0;
        for &(s, wq) in &self.quadrature {
            let a = alpha + s;
            let v = match self.tau.iter().position(|&t| t == a) {
                Some(k) => vals[k],
                None => {
                    let (mut num, mut den) = (0.0, 0.0);
                    for (k, &t) in self.tau.iter().enumerate() {
                        let w = 1.0 / (a - t).norm_sqr();
                        num += w * vals[k];
                        den += w;
                    }
                    num / den
                }
            };
            acc += wq * v;
        }
        Ok(acc)
    }
}
