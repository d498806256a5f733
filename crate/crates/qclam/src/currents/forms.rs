use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::C64;

type RealCoef = Arc<dyn Fn(C64, C64) -> f64 + Send + Sync>;
type ComplexCoef = Arc<dyn Fn(C64, C64) -> C64 + Send + Sync>;

/// Largest coefficient tolerated on the boundary circle of the declared support.
const SUPPORT_TOL: f64 = 1e-9;

/// Test forms on the bidisk, supported over `|z| < radius < 1`.
#[derive(Clone)]
pub enum TestForm {
    /// `psi(z, w) (i/2) dz ^ dzbar` with real `psi`.
    Two { psi: RealCoef, radius: f64 },
    /// `b_z dz + b_w dw + b_zbar dzbar + b_wbar dwbar`.
    One { coef: [ComplexCoef; 4], radius: f64 },
}

impl std::fmt::Debug for TestForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TestForm::Two { radius, .. } => write!(f, "TestForm::Two {{ radius: {radius} }}"),
            TestForm::One { radius, .. } => write!(f, "TestForm::One {{ radius: {radius} }}"),
        }
    }
}

/// `(1 - |z|^2 / r^2)^4` inside the disk of radius `r`, zero outside.
pub fn bump(z: C64, r: f64) -> f64 {
    let s = 1.0 - z.norm_sqr() / (r * r);
    if s > 0.0 {
        s.powi(4)
    } else {
        0.0
    }
}

/// Radius of the `w`-bump in the default dictionary; leaves stay inside it.
pub const W_BUMP_RADIUS: f64 = 0.99;

impl TestForm {
    pub fn two(psi: impl Fn(C64, C64) -> f64 + Send + Sync + 'static, radius: f64) -> Self {
        TestForm::Two { psi: Arc::new(psi), radius }
    }

    /// `psi` multiplied by the bump of the given radius.
    pub fn two_with_bump(psi: impl Fn(C64, C64) -> f64 + Send + Sync + 'static, radius: f64) -> Self {
        TestForm::Two { psi: Arc::new(move |z, w| psi(z, w) * bump(z, radius)), radius }
    }

    pub fn zero_two(radius: f64) -> Self {
        Self::two(|_, _| 0.0, radius)
    }

    /// Coefficients of `dz, dw, dzbar, dwbar`.
    pub fn one(coef: [ComplexCoef; 4], radius: f64) -> Self {
        TestForm::One { coef, radius }
    }

    pub fn radius(&self) -> f64 {
        match self {
            TestForm::Two { radius, .. } | TestForm::One { radius, .. } => *radius,
        }
    }

    /// The declared support must sit inside the bidisk and the coefficients
    /// must vanish on its boundary circle.
    pub fn check_support(&self) -> Result<()> {
        let r = self.radius();
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::validation(format!("form support radius {r} must lie in (0, 1)")));
        }
        for a in 0..32 {
            let z = C64::from_polar(r, TAU * a as f64 / 32.0);
            for w in [C64::new(0.0, 0.0), C64::new(0.5, 0.3), C64::new(-0.4, -0.6)] {
                let size = match self {
                    TestForm::Two { psi, .. } => psi(z, w).abs(),
                    TestForm::One { coef, .. } => coef.iter().map(|c| c(z, w).norm()).fold(0.0, f64::max),
                };
                if size > SUPPORT_TOL {
                    return Err(Error::validation(format!(
                        "form coefficient {size:e} does not vanish at |z| = {r} (z = {z}, w = {w})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Default closedness dictionary: the bump `b(z) b(w)` times each of the
/// monomials `1, z, w, zbar, wbar, z wbar`, placed in each of the four slots.
pub fn default_dictionary() -> Vec<TestForm> {
    const R: f64 = 0.9;
    let monomials: [fn(C64, C64) -> C64; 6] = [
        |_, _| C64::new(1.0, 0.0),
        |z, _| z,
        |_, w| w,
        |z, _| z.conj(),
        |_, w| w.conj(),
        |z, w| z * w.conj(),
    ];
    let mut out = Vec::with_capacity(24);
    for m in monomials {
        for slot in 0..4 {
            let zero: ComplexCoef = Arc::new(|_, _| C64::new(0.0, 0.0));
            let mut coef = [zero.clone(), zero.clone(), zero.clone(), zero];
            coef[slot] = Arc::new(move |z, w| m(z, w) * (bump(z, R) * bump(w, W_BUMP_RADIUS)));
            out.push(TestForm::one(coef, R));
        }
    }
    out
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Polar product rule on a disk: Gauss-Legendre in the radius,
/// trapezoidal in the angle.
#[derive(Clone, Debug)]
pub struct DiskQuadrature {
    pub points: Vec<(C64, f64)>,
}

impl DiskQuadrature {
    pub fn new(center: C64, radius: f64, n_r: usize, n_theta: usize) -> Self {
        let gl = gauss_legendre(n_r);
        let mut points = Vec::with_capacity(n_r * n_theta);
        for &(x, w) in &gl {
            let r = 0.5 * radius * (x + 1.0);
            let wr = 0.5 * radius * w * r * TAU / n_theta as f64;
            for b in 0..n_theta {
                points.push((center + C64::from_polar(r, TAU * b as f64 / n_theta as f64), wr));
            }
        }
        Self { points }
    }

    /// 64 x 64 rule.
    pub fn standard(center: C64, radius: f64) -> Self {
        Self::new(center, radius, 64, 64)
    }

    pub fn integrate(&self, mut f: impl FnMut(C64) -> Result<f64>) -> Result<f64> {
        let terms = self.points.iter().map(|&(z, w)| Ok(w * f(z)?)).collect::<Result<Vec<_>>>()?;
        Ok(crate::scalar::pairwise_sum(&terms))
    }

    pub fn integrate_complex(&self, mut f: impl FnMut(C64) -> Result<C64>) -> Result<C64> {
        let mut re = Vec::with_capacity(self.points.len());
        let mut im = Vec::with_capacity(self.points.len());
        for &(z, w) in &self.points {
            let v = f(z)? * w;
            re.push(v.re);
            im.push(v.im);
        }
        Ok(C64::new(crate::scalar::pairwise_sum(&re), crate::scalar::pairwise_sum(&im)))
    }
}
