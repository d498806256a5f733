use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::field_ops::{ComplexField, GridSpec};
use crate::motion::HolomorphicMotion;
use crate::C64;

/// Number of fibers on the unit circle sampled to extract coefficients.
pub const FIBERS: usize = 32;
/// Coefficients below this sup norm are dropped.
pub const DROP_BELOW: f64 = 1e-12;
/// Largest admissible aliased or anti-holomorphic coefficient.
pub const TAIL_TOLERANCE: f64 = 1e-9;

// Step of the central differences in the fiber variable.
const ETA: f64 = 1e-4;

/// `mu^z(alpha) = sum_{k>=1} z^k mu_k(alpha)`: the Beltrami coefficient of
/// the holonomy `h_{0,z}` expanded in the base variable, truncated to the
/// closed unit disk of the fiber.
///
/// The coefficients come from a discrete Fourier transform over `FIBERS`
/// fibers on `|z| = 1`; holomorphy in `z` makes the non-positive modes
/// vanish, which is checked.
#[derive(Clone, Debug)]
pub struct HolomorphicExpansion {
    spec: GridSpec,
    coeffs: Vec<(usize, ComplexField<f64>)>,
    tail: f64,
}

impl HolomorphicExpansion {
    pub fn new(m: &HolomorphicMotion, spec: GridSpec) -> Result<Self> {
        if !m.is_global() {
            return Err(Error::domain("the fiberwise expansion needs a global motion"));
        }
        let zero = C64::new(0.0, 0.0);
        // Fast path when the leaf labels are the points of the fiber over 0.
        let mut labels_are_points = true;
        for a in m.tau().iter().copied().chain([C64::new(0.37, -0.21), C64::new(-0.8, 0.45)]) {
            if (m.phi(a, zero)? - a).norm() > 1e-12 {
                labels_are_points = false;
            }
        }
        let holonomy = |alpha: C64, z: C64| -> Result<C64> {
            if labels_are_points {
                m.phi(alpha, z)
            } else {
                m.phi(m.invert_fiber(zero, alpha)?, z)
            }
        };
        let inside: Vec<(usize, usize, C64)> = spec.nodes().filter(|n| n.2.norm() <= 1.0).collect();
        let mut samples = vec![vec![C64::new(0.0, 0.0); inside.len()]; FIBERS];
        for (f, row) in samples.iter_mut().enumerate() {
            let z = C64::from_polar(1.0, TAU * f as f64 / FIBERS as f64);
            for (slot, &(_, _, a)) in row.iter_mut().zip(&inside) {
                let fx = (holonomy(a + ETA, z)? - holonomy(a - ETA, z)?) / (2.0 * ETA);
                let iy = C64::new(0.0, ETA);
                let fy = (holonomy(a + iy, z)? - holonomy(a - iy, z)?) / (2.0 * ETA);
                let i = C64::new(0.0, 1.0);
                let (d, dbar) = ((fx - i * fy) * 0.5, (fx + i * fy) * 0.5);
                if d.norm() < 1e-12 {
                    return Err(Error::Degenerate { re: a.re, im: a.im, reason: format!("holonomy to z = {z} is singular") });
                }
                *slot = dbar / d;
            }
        }
        let mut coeffs = Vec::new();
        let mut tail: f64 = 0.0;
        for k in 0..FIBERS {
            let mut vals = vec![C64::new(0.0, 0.0); spec.len()];
            let mut sup: f64 = 0.0;
            for (p, &(i, j, _)) in inside.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (f, row) in samples.iter().enumerate() {
                    acc += row[p] * C64::from_polar(1.0, -TAU * ((k * f) % FIBERS) as f64 / FIBERS as f64);
                }
                let v = acc / FIBERS as f64;
                sup = sup.max(v.norm());
                vals[spec.index(i, j)] = v;
            }
            if k == 0 || k >= FIBERS / 2 {
                tail = tail.max(sup);
            } else if sup >= DROP_BELOW {
                coeffs.push((k, ComplexField::new(spec, vals)?));
            }
        }
        if tail > TAIL_TOLERANCE {
            return Err(Error::Numerical {
                message: "fiber Beltrami coefficients are not resolved by a holomorphic expansion in z".into(),
                residual: tail,
            });
        }
        Ok(Self { spec, coeffs, tail })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    /// Retained `(k, mu_k)`, increasing in `k`.
    pub fn coefficients(&self) -> &[(usize, ComplexField<f64>)] {
        &self.coeffs
    }

    /// Largest discarded mode (constant, aliased or anti-holomorphic).
    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// `mu^z` on the fiber grid.
    pub fn fiber_mu(&self, z: C64) -> ComplexField<f64> {
        sum_powers(self.spec, &self.coeffs, z)
    }

    /// `sup_{|z| <= 1} sup |mu^z|`, attained on the unit circle.
    pub fn sup(&self) -> f64 {
        sup_on_circle(self.spec, &self.coeffs)
    }
}

pub(crate) fn sum_powers(spec: GridSpec, coeffs: &[(usize, ComplexField<f64>)], z: C64) -> ComplexField<f64> {
    let mut out = vec![C64::new(0.0, 0.0); spec.len()];
    for (k, c) in coeffs {
        let zk = z.powu(*k as u32);
        for (o, v) in out.iter_mut().zip(c.values()) {
            *o += zk * v;
        }
    }
    ComplexField::new(spec, out).expect("finite coefficients")
}

/// Maximum modulus over 64 points of the unit circle.
pub(crate) fn sup_on_circle(spec: GridSpec, coeffs: &[(usize, ComplexField<f64>)]) -> f64 {
    (0..64)
        .map(|a| sum_powers(spec, coeffs, C64::from_polar(1.0, TAU * a as f64 / 64.0)).sup_norm())
        .fold(0.0, f64::max)
}
