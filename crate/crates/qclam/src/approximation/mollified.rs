use super::expansion::{sup_on_circle, HolomorphicExpansion};
use crate::beltrami::{convolve_bump, MollifierSpec};
use crate::error::{Error, Result};
use crate::field_ops::{plan_for, ComplexField, CubicStencil, GridSpec};
use crate::lamination::Lamination;
use crate::C64;

/// Hard cap on the number of Taylor terms in `z`.
pub const MAX_TERMS: usize = 200;
/// Terms are added until `sup |Phi_n| <= TERM_RATIO * sup |Phi_1|`.
pub const TERM_RATIO: f64 = 1e-14;

const NEWTON_TOL: f64 = 1e-13;
const NEWTON_MAX: usize = 50;

/// The holomorphic motion generated by `mu^z_eps = sum z^k (mu_k * theta_eps)`.
///
/// Each fiber map `h_z` is the principal solution for `mu^z_eps`, written
/// as a power series in `z`: `h(z, alpha) = alpha + sum_n z^n C Phi_n` where
/// `Phi_n = mu_n + sum_{k<n} mu_k B Phi_{n-k}` collects the `z^n` part of the
/// Neumann series. Because the series is analytic in `z`, every
/// `z -> h(z, alpha)` is a holomorphic leaf and leaves never cross.
#[derive(Clone, Debug)]
pub struct MollifiedLamination {
    epsilon: f64,
    spec: GridSpec,
    mu: Vec<(usize, ComplexField<f64>)>,
    terms: Vec<Term>,
    mu_sup: f64,
    tau: Vec<C64>,
}

#[derive(Clone, Debug)]
struct Term {
    n: usize,
    phi: Vec<C64>,
    cphi: Vec<C64>,
    bphi: Vec<C64>,
}

impl MollifiedLamination {
    /// `epsilon = 0` gives the unmollified motion, the reference for errors.
    pub fn from_expansion(exp: &HolomorphicExpansion, epsilon: f64, tau: &[C64]) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::validation(format!("epsilon = {epsilon} must be non-negative")));
        }
        let spec = exp.spec();
        let mu: Vec<(usize, ComplexField<f64>)> = if epsilon > 0.0 {
            if 1.0 + epsilon + 2.0 * spec.spacing() >= spec.half_width() {
                return Err(Error::validation(format!(
                    "mollified support 1 + {epsilon} does not fit in the cell of half-width {}",
                    spec.half_width()
                )));
            }
            let m = MollifierSpec::new(epsilon)?;
            exp.coefficients().iter().map(|(k, c)| (*k, convolve_bump(c, 1.0, &m))).collect()
        } else {
            exp.coefficients().to_vec()
        };
        let mu_sup = sup_on_circle(spec, &mu);
        let terms = taylor_terms(spec, &mu)?;
        Ok(Self { epsilon, spec, mu, terms, mu_sup, tau: tau.to_vec() })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn tau(&self) -> &[C64] {
        &self.tau
    }

    /// Number of Taylor terms kept.
    pub fn order(&self) -> usize {
        self.terms.last().map_or(0, |t| t.n)
    }

    /// `sup_{|z| <= 1} sup |mu^z_eps|`.
    pub fn mu_sup(&self) -> f64 {
        self.mu_sup
    }

    /// The mollified coefficients `(k, mu_k * theta_eps)`.
    pub fn coefficients(&self) -> &[(usize, ComplexField<f64>)] {
        &self.mu
    }

    fn stencil(&self, alpha: C64) -> Result<CubicStencil> {
        self.spec
            .cubic_stencil(alpha)
            .ok_or_else(|| Error::domain(format!("alpha = {alpha} is outside the fiber grid")))
    }

    fn series(&self, z: C64, st: &CubicStencil, pick: impl Fn(&Term) -> &[C64], deriv: bool) -> C64 {
        let n = self.spec.n();
        let mut acc = C64::new(0.0, 0.0);
        for t in &self.terms {
            let coef = if deriv { z.powu(t.n as u32 - 1) * t.n as f64 } else { z.powu(t.n as u32) };
            acc += coef * st.apply(n, pick(t));
        }
        acc
    }

    /// The point of the fiber over `z` on the leaf labelled `alpha`.
    pub fn h(&self, z: C64, alpha: C64) -> Result<C64> {
        let st = self.stencil(alpha)?;
        Ok(alpha + self.series(z, &st, |t| &t.cphi, false))
    }

    /// Slope `dh/dz` of the leaf through `alpha`.
    pub fn h_z(&self, z: C64, alpha: C64) -> Result<C64> {
        let st = self.stencil(alpha)?;
        Ok(self.series(z, &st, |t| &t.cphi, true))
    }

    /// Wirtinger derivatives `(d h, dbar h)` in the fiber variable.
    pub fn jacobian(&self, z: C64, alpha: C64) -> Result<(C64, C64)> {
        let st = self.stencil(alpha)?;
        Ok((1.0 + self.series(z, &st, |t| &t.bphi, false), self.series(z, &st, |t| &t.phi, false)))
    }

    /// Label of the leaf through `(z, w)`.
    pub fn invert(&self, z: C64, w: C64) -> Result<C64> {
        let tol = NEWTON_TOL * (1.0 + w.norm());
        let mut alpha = w;
        let mut res = f64::INFINITY;
        for _ in 0..NEWTON_MAX {
            let r = self.h(z, alpha)? - w;
            res = r.norm();
            if res <= tol {
                return Ok(alpha);
            }
            let (a, b) = self.jacobian(z, alpha)?;
            let det = a.norm_sqr() - b.norm_sqr();
            if det <= 1e-12 {
                return Err(Error::Degenerate { re: w.re, im: w.im, reason: format!("fiber map over z = {z} is singular") });
            }
            alpha -= (a.conj() * r - b * r.conj()) / det;
        }
        Err(Error::domain(format!("leaf inversion at z = {z}, w = {w} did not converge (residual {res:e})")))
    }

    /// `sup |h_eps - h_other|` over the labels in `tau` and `|z| <= radius`,
    /// sampled on `z_samples`.
    pub fn leaf_deviation(&self, other: &MollifiedLamination, z_samples: &[C64]) -> Result<f64> {
        let mut sup: f64 = 0.0;
        for &a in &self.tau {
            for &z in z_samples {
                sup = sup.max((self.h(z, a)? - other.h(z, a)?).norm());
            }
        }
        Ok(sup)
    }
}

fn taylor_terms(spec: GridSpec, mu: &[(usize, ComplexField<f64>)]) -> Result<Vec<Term>> {
    let plan = plan_for::<f64>(spec);
    let len = spec.len();
    let kmax = mu.iter().map(|c| c.0).max().unwrap_or(0);
    let mut terms: Vec<Term> = Vec::new();
    let mut first = 0.0;
    for n in 1..=MAX_TERMS {
        let mut phi = vec![C64::new(0.0, 0.0); len];
        for (k, c) in mu {
            if *k == n {
                for (p, v) in phi.iter_mut().zip(c.values()) {
                    *p += v;
                }
            } else if *k < n {
                let prev = &terms[n - k - 1].bphi;
                for ((p, v), b) in phi.iter_mut().zip(c.values()).zip(prev) {
                    *p += v * b;
                }
            }
        }
        let sup = phi.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if n == 1 {
            first = sup;
        }
        let (cphi, bphi) = plan.both_raw(&phi);
        terms.push(Term { n, phi, cphi, bphi });
        if n >= kmax && sup <= TERM_RATIO * first {
            while terms.last().is_some_and(|t| t.phi.iter().all(|v| v.norm() == 0.0)) {
                terms.pop();
            }
            return Ok(terms);
        }
    }
    Err(Error::Numerical {
        message: format!("Taylor series in z did not settle within {MAX_TERMS} terms"),
        residual: terms.last().map_or(0.0, |t| t.phi.iter().map(|v| v.norm()).fold(0.0, f64::max)),
    })
}

/// Mollified lamination of `lam` with `mu_k` computed on its fiber grid.
pub fn mollified_lamination(lam: &Lamination, epsilon: f64) -> Result<MollifiedLamination> {
    if !(epsilon > 0.0) {
        return Err(Error::validation(format!("epsilon = {epsilon} must be positive")));
    }
    let exp = HolomorphicExpansion::new(lam.motion(), lam.fiber_grid())?;
    MollifiedLamination::from_expansion(&exp, epsilon, lam.tau())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::HolomorphicMotion;

    fn shear(r: f64, n: usize) -> (HolomorphicExpansion, Vec<C64>) {
        let m = HolomorphicMotion::builtin("shear").unwrap().rescale_base(r).unwrap();
        let e = HolomorphicExpansion::new(&m, GridSpec::new(2.0, n).unwrap()).unwrap();
        (e, m.tau().to_vec())
    }

    #[test]
    fn reference_matches_the_motion_inside() {
        // phi_alpha(z) = alpha + r z conj(alpha) for |alpha| <= 1 only
        // near the origin; the series reproduces it where the truncation
        // does not reach.
        let (e, tau) = shear(0.1, 128);
        let refl = MollifiedLamination::from_expansion(&e, 0.0, &tau).unwrap();
        let m = HolomorphicMotion::builtin("shear").unwrap().rescale_base(0.1).unwrap();
        let mut worst: f64 = 0.0;
        for &a in &tau {
            for z in [C64::new(0.5, 0.0), C64::new(0.0, -0.8), C64::new(0.3, 0.3)] {
                worst = worst.max((refl.h(z, a).unwrap() - m.phi(a, z).unwrap()).norm());
            }
        }
        assert!(worst < 2e-2, "defect {worst}");
    }

    #[test]
    fn inversion_round_trips() {
        let (e, tau) = shear(0.3, 64);
        let ml = MollifiedLamination::from_expansion(&e, 0.2, &tau).unwrap();
        for &a in &tau {
            let z = C64::new(0.4, -0.5);
            let w = ml.h(z, a).unwrap();
            assert!((ml.invert(z, w).unwrap() - a).norm() < 1e-11);
        }
    }

    #[test]
    fn mollifying_does_not_raise_the_dilatation() {
        let (e, tau) = shear(0.3, 64);
        let ml = MollifiedLamination::from_expansion(&e, 0.1, &tau).unwrap();
        assert!(ml.mu_sup() <= e.sup() + 1e-12);
        assert!(ml.order() > 3);
    }

    #[test]
    fn leaves_are_holomorphic_in_z() {
        let (e, tau) = shear(0.3, 64);
        let ml = MollifiedLamination::from_expansion(&e, 0.2, &tau).unwrap();
        let (a, z, s) = (tau[2], C64::new(0.2, 0.1), 1e-5);
        let i = C64::new(0.0, 1.0);
        let dx = (ml.h(z + s, a).unwrap() - ml.h(z - s, a).unwrap()) / (2.0 * s);
        let dy = (ml.h(z + i * s, a).unwrap() - ml.h(z - i * s, a).unwrap()) / (2.0 * s);
        assert!(((dx + i * dy) * 0.5).norm() < 1e-9);
        assert!((ml.h_z(z, a).unwrap() - dx).norm() < 1e-8);
    }

    #[test]
    fn zero_epsilon_is_rejected_by_the_public_entry() {
        let lam = Lamination::new(HolomorphicMotion::builtin("shear").unwrap());
        assert!(matches!(mollified_lamination(&lam, 0.0), Err(Error::Validation(_))));
    }
}
