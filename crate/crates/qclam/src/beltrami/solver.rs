use num_complex::Complex;
use serde::Serialize;

use super::BeltramiField;
use crate::error::{Error, Result};
use crate::field_ops::{plan_for, ComplexField, GridSpec};
use crate::scalar::{pairwise_sum, Real};

/// Default stopping tolerance for [`principal_solution`].
pub const DEFAULT_TOL: f64 = 1e-10;
/// Iterations allowed beyond the contraction estimate.
pub const ITERATION_MARGIN: usize = 10;

/// Grid samples of the principal solution `h = w + C(phi)` of
/// `h_wbar = mu h_w`.
///
/// `phi` is the density solving `phi = mu (1 + B phi)`; `dh` holds
/// `h_w = 1 + B phi`. Together with `phi = h_wbar` they are the derivatives
/// consistent with the transforms, which is how `residual` is measured:
/// `|| phi - mu (1 + B phi) ||_2`.
#[derive(Clone, Debug)]
pub struct QCMap<T> {
    pub h: ComplexField<T>,
    pub phi: ComplexField<T>,
    pub dh: ComplexField<T>,
    pub mu_source: BeltramiField<T>,
    pub iterations: usize,
    pub residual: f64,
}

/// Solver diagnostics as written to JSON.
#[derive(Clone, Debug, Serialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    pub max_iterations: usize,
    pub residual: f64,
    pub kappa_bound: f64,
    pub tol: f64,
    pub grid_n: usize,
    pub grid_l: f64,
}

impl<T: Real> QCMap<T> {
    pub fn spec(&self) -> GridSpec {
        self.h.spec()
    }

    pub fn diagnostics(&self, tol: f64) -> SolveDiagnostics {
        SolveDiagnostics {
            iterations: self.iterations,
            max_iterations: max_iterations(self.mu_source.kappa_bound(), tol),
            residual: self.residual,
            kappa_bound: self.mu_source.kappa_bound(),
            tol,
            grid_n: self.spec().n(),
            grid_l: self.spec().half_width(),
        }
    }
}

/// `ceil(log tol / log kappa) + margin`.
pub fn max_iterations(kappa: f64, tol: f64) -> usize {
    if kappa <= 0.0 || tol >= 1.0 {
        return ITERATION_MARGIN;
    }
    ((tol.ln() / kappa.ln()).ceil().max(0.0) as usize) + ITERATION_MARGIN
}

fn l2_diff<T: Real>(a: &[Complex<T>], b: &[Complex<T>], h: f64) -> f64 {
    let terms: Vec<T> = a.iter().zip(b).map(|(x, y)| (*x - *y).norm_sqr()).collect();
    (pairwise_sum(&terms).as_f64() * h * h).sqrt()
}

/// Principal solution by the fixed-point iteration `phi <- mu (1 + B phi)`,
/// stopped once successive iterates differ by at most `tol` in `L^2`.
pub fn principal_solution<T: Real>(mu: &BeltramiField<T>, tol: f64) -> Result<QCMap<T>> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::validation(format!("tolerance {tol} must be positive")));
    }
    let spec = mu.spec();
    let plan = plan_for::<T>(spec);
    let h = spec.spacing();
    let m = mu.mu().values();
    let limit = max_iterations(mu.kappa_bound(), tol);
    let one = Complex::new(T::one(), T::zero());

    let mut phi = vec![Complex::new(T::zero(), T::zero()); spec.len()];
    let mut iterations = 0;
    let mut diff = f64::INFINITY;
    while diff > tol {
        if iterations == limit {
            return Err(Error::Numerical {
                message: format!("Beltrami iteration did not reach tol {tol:e} in {limit} steps"),
                residual: diff,
            });
        }
        let b = plan.beurling_raw(&phi);
        let next: Vec<Complex<T>> = m.iter().zip(&b).map(|(&mu, &bp)| mu * (one + bp)).collect();
        diff = l2_diff(&next, &phi, h);
        phi = next;
        iterations += 1;
        if !diff.is_finite() {
            return Err(Error::Numerical { message: "Beltrami iteration diverged".into(), residual: diff });
        }
    }

    let (c, b) = plan.both_raw(&phi);
    let dh: Vec<Complex<T>> = b.iter().map(|&bp| one + bp).collect();
    let image: Vec<Complex<T>> = m.iter().zip(&dh).map(|(&mu, &d)| mu * d).collect();
    let residual = l2_diff(&phi, &image, h);
    let hv: Vec<Complex<T>> = spec.nodes().zip(&c).map(|((i, j, _), &cv)| spec.point::<T>(i, j) + cv).collect();
    Ok(QCMap {
        h: ComplexField::new(spec, hv)?,
        phi: ComplexField::new(spec, phi)?,
        dh: ComplexField::new(spec, dh)?,
        mu_source: mu.clone(),
        iterations,
        residual,
    })
}

/// `|h_wbar / h_w|` at the node nearest `w`, by central differences of `h`.
pub fn dilatation_at<T: Real>(map: &QCMap<T>, w: Complex<f64>) -> Result<f64> {
    let (i, j) = map
        .spec()
        .nearest_node(w, 1)
        .ok_or_else(|| Error::validation(format!("point {w} is not in the grid interior")))?;
    let (d, dbar) = map.h.wirtinger_at(i, j).expect("interior node");
    let d = Complex::new(d.re.as_f64(), d.im.as_f64());
    let dbar = Complex::new(dbar.re.as_f64(), dbar.im.as_f64());
    if d.norm() < 1e-12 {
        return Err(Error::Degenerate { re: w.re, im: w.im, reason: "|h_w| below 1e-12".into() });
    }
    Ok((dbar / d).norm())
}

/// Integrability exponent attached to a dilatation bound: `1 + 1/kappa`.
pub fn p_max(kappa: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&kappa) {
        return Err(Error::validation(format!("kappa = {kappa} must lie in [0, 1)")));
    }
    Ok(if kappa == 0.0 { f64::INFINITY } else { 1.0 + 1.0 / kappa })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_ops::cauchy_transform;

    #[test]
    fn zero_coefficient_gives_identity() {
        let spec = GridSpec::new(2.0, 64).unwrap();
        let map = principal_solution(&BeltramiField::<f64>::zero(spec), DEFAULT_TOL).unwrap();
        assert!(map.residual <= 1e-12);
        let id = ComplexField::identity(spec);
        assert_eq!(map.h, id);
        assert_eq!(dilatation_at(&map, Complex::new(0.3, 0.2)).unwrap(), 0.0);
    }

    #[test]
    fn radial_stretch_matches_closed_form() {
        let spec = GridSpec::new(2.0, 256).unwrap();
        let mu = BeltramiField::<f64>::radial_stretch(spec, 2.0).unwrap();
        let map = principal_solution(&mu, DEFAULT_TOL).unwrap();
        let exact = ComplexField::from_fn(spec, |w| if w.norm() < 1.0 { w * w.norm() } else { w }).unwrap();
        let err = map.h.relative_l2_error(&exact).unwrap();
        assert!(err < 1e-2, "relative error {err}");
        assert!(map.iterations <= max_iterations(1.0 / 3.0, DEFAULT_TOL));
        assert!(map.residual <= 10.0 * DEFAULT_TOL);
        let k = dilatation_at(&map, Complex::new(0.5, 0.0)).unwrap();
        assert!((k - 1.0 / 3.0).abs() < 1e-2, "{k}");
    }

    #[test]
    fn small_coefficient_is_first_order() {
        let spec = GridSpec::new(2.0, 128).unwrap();
        let mu = BeltramiField::<f64>::bump(spec, Complex::new(1e-3, 0.0)).unwrap();
        let map = principal_solution(&mu, DEFAULT_TOL).unwrap();
        let c = cauchy_transform(mu.mu()).unwrap();
        let first = ComplexField::identity(spec).lin_comb(Complex::new(1.0, 0.0), &c, Complex::new(1.0, 0.0)).unwrap();
        let gap = map.h.lin_comb(Complex::new(1.0, 0.0), &first, Complex::new(-1.0, 0.0)).unwrap().sup_norm();
        assert!(gap <= 1e-5, "{gap}");
    }

    #[test]
    fn iteration_limit_is_reported() {
        let spec = GridSpec::new(2.0, 64).unwrap();
        let mu = BeltramiField::<f64>::radial_stretch(spec, 3.0).unwrap();
        // Successive iterates stall at rounding level, far above this tolerance.
        let err = principal_solution(&mu, 1e-300).unwrap_err();
        assert!(err.is_numerical(), "{err}");
    }

    #[test]
    fn p_max_formula() {
        let kappa = 0.2 / 1.01;
        assert!((p_max(kappa).unwrap() - 6.05).abs() < 1e-12);
        assert!(p_max(1e-6).unwrap() > 1e6);
        assert!(p_max(0.1).unwrap() > p_max(0.2).unwrap());
        assert!(p_max(1.0).is_err());
        assert!(p_max(-0.1).is_err());
    }
}
