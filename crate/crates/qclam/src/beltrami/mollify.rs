use num_complex::Complex;

use super::BeltramiField;
use crate::error::{Error, Result};
use crate::field_ops::{ComplexField, GridSpec};
use crate::scalar::Real;

/// Radial bump `(1 - |w/eps|^2)^2` on `|w| <= eps`, normalized to unit mass
/// on the grid it is sampled on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MollifierSpec {
    epsilon: f64,
}

impl MollifierSpec {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::validation(format!("mollifier radius {epsilon} must be positive")));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Kernel profile before normalization.
    pub fn profile(&self, w: Complex<f64>) -> f64 {
        let s = 1.0 - (w / self.epsilon).norm_sqr();
        if s > 0.0 {
            s * s
        } else {
            0.0
        }
    }

    /// Offsets `(di, dj)` and discrete weights summing to one; the kernel
    /// density is `weight / h^2`.
    pub fn weights(&self, spec: GridSpec) -> Vec<(isize, isize, f64)> {
        let h = spec.spacing();
        let reach = (self.epsilon / h).floor() as isize;
        let mut out = Vec::new();
        for dj in -reach..=reach {
            for di in -reach..=reach {
                let v = self.profile(Complex::new(di as f64 * h, dj as f64 * h));
                if v > 0.0 {
                    out.push((di, dj, v));
                }
            }
        }
        let total: f64 = out.iter().map(|t| t.2).sum();
        for t in &mut out {
            t.2 /= total;
        }
        out
    }

    /// Grid integral of the kernel, `h^2 sum theta`.
    pub fn mass(&self, spec: GridSpec) -> f64 {
        self.weights(spec).iter().map(|t| t.2).sum()
    }
}

/// Convolution of a field supported in `D(0, support)` with the kernel.
/// Direct summation over the support keeps the result exactly supported in
/// `D(0, support + eps)`.
pub fn convolve_bump<T: Real>(f: &ComplexField<T>, support: f64, spec_m: &MollifierSpec) -> ComplexField<T> {
    let spec = f.spec();
    let n = spec.n() as isize;
    let weights = spec_m.weights(spec);
    let reach = support + 2.0 * spec.spacing();
    let mut out = vec![Complex::new(T::zero(), T::zero()); spec.len()];
    for (i, j, w) in spec.nodes() {
        let v = f.get(i, j);
        if w.norm() > reach || (v.re == T::zero() && v.im == T::zero()) {
            continue;
        }
        for &(di, dj, wt) in &weights {
            let (a, b) = (i as isize + di, j as isize + dj);
            if a >= 0 && b >= 0 && a < n && b < n {
                let k = b as usize * spec.n() + a as usize;
                out[k] = out[k] + v * T::lit(wt);
            }
        }
    }
    ComplexField::new(spec, out).expect("finite convolution")
}

/// `mu * theta_eps`, convolving in `w` only.
pub fn mollify<T: Real>(mu: &BeltramiField<T>, spec_m: &MollifierSpec) -> Result<BeltramiField<T>> {
    let grid = mu.spec();
    let radius = mu.support_radius() + spec_m.epsilon();
    if radius + 2.0 * grid.spacing() >= grid.half_width() {
        return Err(Error::validation(format!(
            "mollified support radius {radius} does not fit in the cell of half-width {}",
            grid.half_width()
        )));
    }
    let out = convolve_bump(mu.mu(), mu.support_radius(), spec_m);
    // Convex combinations cannot raise the sup norm beyond rounding.
    let bound = mu.kappa_bound().max(out.sup_norm().as_f64());
    BeltramiField::with_support(out, bound, radius)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_has_unit_mass() {
        for (n, eps) in [(64, 0.3), (256, 0.05), (256, 0.2), (512, 0.013)] {
            let spec = GridSpec::new(2.0, n).unwrap();
            let m = MollifierSpec::new(eps).unwrap();
            assert!((m.mass(spec) - 1.0).abs() < 1e-10);
        }
        assert!(MollifierSpec::new(0.0).is_err());
        assert!(MollifierSpec::new(-1.0).is_err());
    }

    #[test]
    fn plateau_value_is_kept_and_sup_does_not_grow() {
        let spec = GridSpec::new(2.0, 128).unwrap();
        let disk = ComplexField::from_fn(spec, |w| Complex::new(if w.norm() < 1.0 { 0.2 } else { 0.0 }, 0.0)).unwrap();
        let flat = BeltramiField::new(disk, 0.2).unwrap();
        let out = mollify(&flat, &MollifierSpec::new(0.1).unwrap()).unwrap();
        let c = spec.n() / 2;
        assert!((out.mu().get(c, c) - flat.mu().get(c, c)).norm() < 1e-14);
        assert!(out.sup_norm() <= flat.sup_norm() + 1e-12);
        assert!((out.support_radius() - 1.1).abs() < 1e-15);
        assert!(out.mu().sup_outside(1.1 + 2.0 * spec.spacing()) == 0.0);
    }

    #[test]
    fn smooth_coefficient_moves_by_at_most_g_eps() {
        let spec = GridSpec::new(2.0, 128).unwrap();
        let mu = BeltramiField::<f64>::bump(spec, Complex::new(0.5, 0.0)).unwrap();
        // |grad 0.5 (1 - r^2)^2| = 2 r (1 - r^2) <= 4 / (3 sqrt 3)
        let g = 4.0 / (3.0 * 3f64.sqrt());
        for eps in [0.05, 0.1, 0.2] {
            let out = mollify(&mu, &MollifierSpec::new(eps).unwrap()).unwrap();
            let gap = out.mu().lin_comb(Complex::new(1.0, 0.0), mu.mu(), Complex::new(-1.0, 0.0)).unwrap().sup_norm();
            assert!(gap <= g * eps, "eps {eps}: {gap}");
        }
    }

    #[test]
    fn oversized_radius_is_rejected() {
        let spec = GridSpec::new(2.0, 64).unwrap();
        let mu = BeltramiField::<f64>::zero(spec);
        assert!(mollify(&mu, &MollifierSpec::new(1.0).unwrap()).is_err());
    }
}
