use num_complex::Complex;

use crate::error::{Error, Result};
use crate::field_ops::{check_support, ComplexField, GridSpec};
use crate::scalar::Real;

/// A Beltrami coefficient `mu` on a grid with a declared bound
/// `sup |mu| <= kappa_bound < 1`.
///
/// `mu` vanishes outside the disk of radius `support_radius`; that radius is 1
/// for coefficients built directly and grows by `epsilon` under [`mollify`].
///
/// [`mollify`]: super::mollify
#[derive(Clone, Debug, PartialEq)]
pub struct BeltramiField<T> {
    mu: ComplexField<T>,
    kappa_bound: f64,
    support_radius: f64,
}

impl<T: Real> BeltramiField<T> {
    /// Coefficient supported in the closed unit disk.
    pub fn new(mu: ComplexField<T>, kappa_bound: f64) -> Result<Self> {
        Self::with_support(mu, kappa_bound, 1.0)
    }

    pub fn with_support(mu: ComplexField<T>, kappa_bound: f64, support_radius: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&kappa_bound) {
            return Err(Error::validation(format!("kappa bound {kappa_bound} must lie in [0, 1)")));
        }
        let sup = mu.sup_norm().as_f64();
        // Rounding in the samples may exceed an exactly stated bound.
        if sup > kappa_bound * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::validation(format!("sup |mu| = {sup} exceeds the declared bound {kappa_bound}")));
        }
        check_support(&mu, support_radius)?;
        Ok(Self { mu, kappa_bound, support_radius })
    }

    /// Takes `kappa_bound = sup |mu|`.
    pub fn tight(mu: ComplexField<T>) -> Result<Self> {
        let sup = mu.sup_norm().as_f64();
        Self::new(mu, sup)
    }

    pub fn zero(spec: GridSpec) -> Self {
        Self { mu: ComplexField::zeros(spec), kappa_bound: 0.0, support_radius: 1.0 }
    }

    /// `mu = k w / conj(w)` on the open unit disk with `k = (K - 1)/(K + 1)`.
    /// The principal solution is `w |w|^(K-1)` inside and `w` outside.
    pub fn radial_stretch(spec: GridSpec, big_k: f64) -> Result<Self> {
        if !(big_k >= 1.0 && big_k.is_finite()) {
            return Err(Error::validation(format!("stretch factor K = {big_k} must be finite and >= 1")));
        }
        let k = (big_k - 1.0) / (big_k + 1.0);
        let mu = ComplexField::from_fn(spec, |w| {
            let r = w.norm();
            if r < 1.0 && r > 0.0 {
                let v = w / w.conj() * k;
                Complex::new(T::lit(v.re), T::lit(v.im))
            } else {
                Complex::new(T::zero(), T::zero())
            }
        })?;
        Self::new(mu, k)
    }

    /// Smooth bump `amplitude (1 - |w|^2)^2` on the unit disk.
    pub fn bump(spec: GridSpec, amplitude: Complex<f64>) -> Result<Self> {
        let mu = ComplexField::from_fn(spec, |w| {
            let s = 1.0 - w.norm_sqr();
            let v = if s > 0.0 { amplitude * (s * s) } else { Complex::new(0.0, 0.0) };
            Complex::new(T::lit(v.re), T::lit(v.im))
        })?;
        Self::new(mu, amplitude.norm())
    }

    /// Built-in coefficients by name: `zero`, `radial-stretch:K=<K>`,
    /// `bump:A=<amplitude>`.
    pub fn builtin(name: &str, spec: GridSpec) -> Result<Self> {
        let (head, arg) = match name.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (name, None),
        };
        let param = |key: &str, default: f64| -> Result<f64> {
            match arg {
                None => Ok(default),
                Some(a) => {
                    let v = a
                        .strip_prefix(key)
                        .and_then(|r| r.strip_prefix('='))
                        .ok_or_else(|| Error::validation(format!("expected `{key}=<value>` in {name:?}")))?;
                    v.trim().parse().map_err(|_| Error::validation(format!("bad number in {name:?}")))
                }
            }
        };
        match head {
            "zero" if arg.is_none() => Ok(Self::zero(spec)),
            "radial-stretch" => Self::radial_stretch(spec, param("K", 2.0)?),
            "bump" => Self::bump(spec, Complex::new(param("A", 1e-3)?, 0.0)),
            _ => Err(Error::validation(format!("unknown built-in coefficient {name:?}"))),
        }
    }

    pub fn mu(&self) -> &ComplexField<T> {
        &self.mu
    }

    pub fn spec(&self) -> GridSpec {
        self.mu.spec()
    }

    pub fn kappa_bound(&self) -> f64 {
        self.kappa_bound
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn sup_norm(&self) -> f64 {
        self.mu.sup_norm().as_f64()
    }
}
