use std::collections::HashMap;
use std::io::Write;

use super::Lamination;
use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::scalar::Real;
use crate::C64;

/// Default margin: norms are taken over `D(0, 1 - delta)`.
pub const DEFAULT_DELTA: f64 = 0.1;

// Step for derivatives of closures.
const FD_STEP: f64 = 1e-5;

/// Square lattice `z = (i, j) * step` restricted to `|z| <= radius`, shared
/// by every leaf; the leaf parameter is `z`.
#[derive(Clone, Debug)]
pub struct LeafGrid {
    step: f64,
    radius: f64,
    nodes: Vec<(i32, i32)>,
    lookup: HashMap<(i32, i32), usize>,
}

impl LeafGrid {
    pub fn new(step: f64, radius: f64) -> Result<Self> {
        if !(step > 0.0 && radius > 0.0 && step <= radius) {
            return Err(Error::validation(format!("leaf grid needs 0 < step <= radius, got {step}, {radius}")));
        }
        let m = (radius / step).floor() as i32 + 1;
        let mut nodes = Vec::new();
        for j in -m..=m {
            for i in -m..=m {
                if C64::new(i as f64 * step, j as f64 * step).norm() <= radius * (1.0 + 1e-12) {
                    nodes.push((i, j));
                }
            }
        }
        let lookup = nodes.iter().enumerate().map(|(k, &ij)| (ij, k)).collect();
        Ok(Self { step, radius, nodes, lookup })
    }

    /// Grid over the closed unit disk.
    pub fn unit(step: f64) -> Result<Self> {
        Self::new(step, 1.0)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn point(&self, k: usize) -> C64 {
        let (i, j) = self.nodes[k];
        C64::new(i as f64 * self.step, j as f64 * self.step)
    }

    pub fn points(&self) -> impl Iterator<Item = C64> + '_ {
        (0..self.len()).map(|k| self.point(k))
    }

    /// Index of the node offset by `(di, dj)` from node `k`.
    pub fn neighbor(&self, k: usize, di: i32, dj: i32) -> Option<usize> {
        let (i, j) = self.nodes[k];
        self.lookup.get(&(i + di, j + dj)).copied()
    }

    /// Central-difference gradient `[f_x, f_y]` of nodal values, where both
    /// neighbors exist in each direction.
    pub fn gradient(&self, values: &[f64]) -> Vec<Option<[f64; 2]>> {
        let h2 = 2.0 * self.step;
        (0..self.len())
            .map(|k| {
                let e = self.neighbor(k, 1, 0)?;
                let w = self.neighbor(k, -1, 0)?;
                let n = self.neighbor(k, 0, 1)?;
                let s = self.neighbor(k, 0, -1)?;
                Some([(values[e] - values[w]) / h2, (values[n] - values[s]) / h2])
            })
            .collect()
    }
}

/// Regularity tag carried by a [`LeafFunction`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Smoothness {
    C1,
    Sobolev,
}

/// A function on the leaves through `tau`, sampled on a [`LeafGrid`] in the
/// leaf parameter `z`, with its gradient in `z` and the area stretch
/// `1 + |phi'|^2` of each leaf.
#[derive(Clone, Debug)]
pub struct LeafFunction<T> {
    grid: LeafGrid,
    tau: Vec<C64>,
    values: Vec<Vec<T>>,
    gradients: Vec<Vec<[T; 2]>>,
    stretch: Vec<Vec<f64>>,
    class: Smoothness,
}

impl<T: Real> LeafFunction<T> {
    pub fn new(
        grid: LeafGrid,
        tau: Vec<C64>,
        values: Vec<Vec<T>>,
        gradients: Vec<Vec<[T; 2]>>,
        stretch: Vec<Vec<f64>>,
        class: Smoothness,
    ) -> Result<Self> {
        let n = grid.len();
        let shapes_ok = values.len() == tau.len()
            && gradients.len() == tau.len()
            && stretch.len() == tau.len()
            && values.iter().all(|v| v.len() == n)
            && gradients.iter().all(|v| v.len() == n)
            && stretch.iter().all(|v| v.len() == n);
        if !shapes_ok {
            return Err(Error::validation("leaf function tables do not match the grid and tau"));
        }
        let finite = values.iter().flatten().all(|v| v.is_finite())
            && gradients.iter().flatten().all(|g| g[0].is_finite() && g[1].is_finite())
            && stretch.iter().flatten().all(|s| s.is_finite() && *s >= 1.0);
        if !finite {
            return Err(Error::validation("leaf function samples must be finite"));
        }
        Ok(Self { grid, tau, values, gradients, stretch, class })
    }

    /// Samples `f(z, k)` on leaf `k`; gradients by central differences of `f`.
    pub fn from_fn(lam: &Lamination, grid: LeafGrid, f: impl Fn(C64, usize) -> Result<f64>) -> Result<Self> {
        let tau = lam.tau().to_vec();
        let stretch = leaf_stretch(lam, &grid)?;
        let mut values = Vec::with_capacity(tau.len());
        let mut gradients = Vec::with_capacity(tau.len());
        for k in 0..tau.len() {
            let mut v = Vec::with_capacity(grid.len());
            let mut g = Vec::with_capacity(grid.len());
            for z in grid.points() {
                v.push(T::lit(f(z, k)?));
                let dx = (f(z + FD_STEP, k)? - f(z - FD_STEP, k)?) / (2.0 * FD_STEP);
                let iy = C64::new(0.0, FD_STEP);
                let dy = (f(z + iy, k)? - f(z - iy, k)?) / (2.0 * FD_STEP);
                g.push([T::lit(dx), T::lit(dy)]);
            }
            values.push(v);
            gradients.push(g);
        }
        Self::new(grid, tau, values, gradients, stretch, Smoothness::C1)
    }

    /// Restriction of a straightened function `g(z, alpha)` to the leaves.
    pub fn from_straightened(lam: &Lamination, grid: LeafGrid, g: &dyn StraightenedFunction) -> Result<Self> {
        let tau = lam.tau().to_vec();
        Self::from_fn(lam, grid, |z, k| g.value(z, tau[k]))
    }

    pub fn grid(&self) -> &LeafGrid {
        &self.grid
    }

    pub fn tau(&self) -> &[C64] {
        &self.tau
    }

    pub fn class(&self) -> Smoothness {
        self.class
    }

    pub fn values(&self, leaf: usize) -> &[T] {
        &self.values[leaf]
    }

    pub fn gradients(&self, leaf: usize) -> &[[T; 2]] {
        &self.gradients[leaf]
    }

    pub fn stretch(&self, leaf: usize) -> &[f64] {
        &self.stretch[leaf]
    }

    /// `a f + b g` for functions on the same grid and leaves.
    pub fn lin_comb(&self, a: T, other: &Self, b: T) -> Result<Self> {
        if self.tau != other.tau || self.grid.len() != other.grid.len() || self.grid.step != other.grid.step {
            return Err(Error::validation("leaf functions live on different grids"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| u.iter().zip(v).map(|(&x, &y)| a * x + b * y).collect())
            .collect();
        let gradients = self
            .gradients
            .iter()
            .zip(&other.gradients)
            .map(|(u, v)| u.iter().zip(v).map(|(x, y)| [a * x[0] + b * y[0], a * x[1] + b * y[1]]).collect())
            .collect();
        let class = if self.class == Smoothness::C1 && other.class == Smoothness::C1 {
            Smoothness::C1
        } else {
            Smoothness::Sobolev
        };
        Ok(Self { grid: self.grid.clone(), tau: self.tau.clone(), values, gradients, stretch: self.stretch.clone(), class })
    }

    pub fn scale(&self, c: T) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().flatten().for_each(|v| *v = *v * c);
        out.gradients.iter_mut().flatten().for_each(|g| *g = [g[0] * c, g[1] * c]);
        out
    }

    /// Rows `leaf,alpha_re,alpha_im,z_re,z_im,value,grad_x,grad_y`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["leaf", "alpha_re", "alpha_im", "z_re", "z_im", "value", "grad_x", "grad_y"])
            .map_err(csv_err)?;
        for (k, a) in self.tau.iter().enumerate() {
            for (n, z) in self.grid.points().enumerate() {
                let g = self.gradients[k][n];
                w.write_record(&[
                    k.to_string(),
                    a.re.to_string(),
                    a.im.to_string(),
                    z.re.to_string(),
                    z.im.to_string(),
                    self.values[k][n].as_f64().to_string(),
                    g[0].as_f64().to_string(),
                    g[1].as_f64().to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn leaf_stretch(lam: &Lamination, grid: &LeafGrid) -> Result<Vec<Vec<f64>>> {
    let m = lam.motion();
    m.tau()
        .iter()
        .map(|&a| grid.points().map(|z| Ok(1.0 + m.leaf_slope(a, z)?.norm_sqr())).collect())
        .collect()
}

/// `sup |f| + max_leaf (int |grad_L f|^p dA_L)^(1/p)` over `|z| <= 1 - delta`.
///
/// On the graph of `phi` the leafwise gradient is the parameter gradient
/// divided by `lambda = sqrt(1 + |phi'|^2)` and the area element is
/// `lambda^2 dA`, so the integrand is `|grad f|^p lambda^(2-p)`.
pub fn w1p_norm<T: Real>(f: &LeafFunction<T>, p: f64, delta: f64) -> Result<T> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::validation(format!("exponent p = {p} must exceed 1")));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::validation(format!("margin delta = {delta} must lie in [0, 1)")));
    }
    let r = (1.0 - delta) * (1.0 + 1e-12);
    let inside: Vec<usize> = (0..f.grid.len()).filter(|&n| f.grid.point(n).norm() <= r).collect();
    if inside.is_empty() || f.tau.is_empty() {
        return Err(Error::validation("no samples inside the compact sub-disk"));
    }
    let area = f.grid.step * f.grid.step;
    let mut sup = T::zero();
    let mut grad = T::zero();
    for k in 0..f.tau.len() {
        let mut terms = Vec::with_capacity(inside.len());
        for &n in &inside {
            sup = sup.max(f.values[k][n].abs());
            let g = f.gradients[k][n];
            let mag = (g[0] * g[0] + g[1] * g[1]).sqrt().as_f64();
            terms.push(T::lit(mag.powf(p) * f.stretch[k][n].powf(1.0 - p / 2.0) * area));
        }
        grad = grad.max(crate::scalar::pairwise_sum(&terms).powf(T::lit(1.0 / p)));
    }
    Ok(sup + grad)
}

/// `f(z, alpha) = chi(alpha)`: constant along each leaf.
pub fn extend_constant_along_leaves<T: Real>(chi: &[T], lam: &Lamination, grid: LeafGrid) -> Result<LeafFunction<T>> {
    if chi.len() != lam.tau().len() {
        return Err(Error::validation(format!("chi has {} values for {} leaves", chi.len(), lam.tau().len())));
    }
    let n = grid.len();
    let stretch = leaf_stretch(lam, &grid)?;
    let values = chi.iter().map(|&c| vec![c; n]).collect();
    let gradients = vec![vec![[T::zero(); 2]; n]; chi.len()];
    LeafFunction::new(grid, lam.tau().to_vec(), values, gradients, stretch, Smoothness::C1)
}

/// A real function of straightened coordinates `(z, alpha)`.
pub trait StraightenedFunction: Send + Sync {
    fn value(&self, z: C64, alpha: C64) -> Result<f64>;
}

/// `Re e(alpha, z)` for an expression without `w`.
#[derive(Clone, Debug)]
pub struct FormulaFunction {
    expr: Expr,
}

impl FormulaFunction {
    pub fn new(expr: Expr) -> Result<Self> {
        if expr.mentions(Var::W) {
            return Err(Error::validation("straightened functions depend on z and alpha only"));
        }
        Ok(Self { expr })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::new(Expr::parse(text)?)
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }
}

impl StraightenedFunction for FormulaFunction {
    fn value(&self, z: C64, alpha: C64) -> Result<f64> {
        Ok(self.expr.eval(alpha, z)?.re)
    }
}

impl<F: Fn(C64, C64) -> f64 + Send + Sync> StraightenedFunction for F {
    fn value(&self, z: C64, alpha: C64) -> Result<f64> {
        Ok(self(z, alpha))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::HolomorphicMotion;

    fn single_flat_leaf() -> Lamination {
        let m = HolomorphicMotion::builtin("product").unwrap().with_tau(vec![C64::new(0.0, 0.0)]).unwrap();
        Lamination::new(m)
    }

    #[test]
    fn constant_norm_is_its_modulus() {
        let lam = Lamination::new(HolomorphicMotion::builtin("shear").unwrap());
        let f = extend_constant_along_leaves(&[-0.7f64; 4], &lam, LeafGrid::unit(0.05).unwrap()).unwrap();
        assert_eq!(w1p_norm(&f, 2.0, 0.1).unwrap(), 0.7);
        assert!(f.gradients(2).iter().all(|g| g == &[0.0, 0.0]));
    }

    #[test]
    fn re_z_on_flat_leaf() {
        let f = LeafFunction::<f64>::from_fn(&single_flat_leaf(), LeafGrid::unit(0.01).unwrap(), |z, _| Ok(z.re))
            .unwrap();
        let v = w1p_norm(&f, 2.0, 0.0).unwrap();
        assert!((v - (1.0 + std::f64::consts::PI.sqrt())).abs() < 2e-2, "{v}");
        let doubled = w1p_norm(&f.scale(2.0), 2.0, 0.0).unwrap();
        assert!((doubled - 2.0 * v).abs() < 1e-12);
    }

    #[test]
    fn chi_re_alpha_reads_leaf_label() {
        let lam = Lamination::new(HolomorphicMotion::builtin("affine").unwrap());
        let chi: Vec<f64> = lam.tau().iter().map(|a| a.re).collect();
        let f = extend_constant_along_leaves(&chi, &lam, LeafGrid::unit(0.1).unwrap()).unwrap();
        assert!(f.values(0).iter().all(|&v| v == 0.3));
    }

    #[test]
    fn stretch_of_sloped_leaf() {
        let m = HolomorphicMotion::builtin("affine").unwrap().with_tau(vec![C64::new(0.4, 0.0)]).unwrap();
        let lam = Lamination::new(m);
        let f = LeafFunction::<f64>::from_fn(&lam, LeafGrid::unit(0.1).unwrap(), |_, _| Ok(0.0)).unwrap();
        assert!(f.stretch(0).iter().all(|&s| (s - 1.04).abs() < 1e-10));
    }

    #[test]
    fn validation() {
        let lam = single_flat_leaf();
        let f = extend_constant_along_leaves(&[1.0f64], &lam, LeafGrid::unit(0.1).unwrap()).unwrap();
        assert!(w1p_norm(&f, 1.0, 0.1).is_err());
        assert!(w1p_norm(&f, 2.0, 1.0).is_err());
        assert!(extend_constant_along_leaves(&[1.0f64, 2.0], &lam, LeafGrid::unit(0.1).unwrap()).is_err());
        assert!(FormulaFunction::parse("w + z").is_err());
        assert!(LeafGrid::new(0.0, 1.0).is_err());
    }

    #[test]
    fn grid_gradient_is_exact_on_quadratics() {
        let g = LeafGrid::unit(0.1).unwrap();
        let vals: Vec<f64> = g.points().map(|z| z.re * z.re - 3.0 * z.im).collect();
        for (k, d) in g.gradient(&vals).into_iter().enumerate() {
            if let Some(d) = d {
                let z = g.point(k);
                assert!((d[0] - 2.0 * z.re).abs() < 1e-12 && (d[1] + 3.0).abs() < 1e-12);
            }
        }
    }
}
