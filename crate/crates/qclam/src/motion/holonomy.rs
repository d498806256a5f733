use super::HolomorphicMotion;
use crate::beltrami::BeltramiField;
use crate::error::{Error, Result};
use crate::field_ops::{ComplexField, GridSpec};
use crate::C64;

/// Holonomy `h_{z,z'}` from the fiber over `z` to the fiber over `z'`:
/// exact on the points of the leaves through `tau`, tabulated on a fiber
/// grid for global motions.
#[derive(Clone, Debug)]
pub struct HolonomyMap {
    pub source: C64,
    pub target: C64,
    /// `(phi_alpha(z), phi_alpha(z'))` for `alpha` in `tau`.
    pub leaf_points: Vec<(C64, C64)>,
    /// Values of `h_{z,z'}` at the nodes of the fiber grid.
    pub grid: Option<ComplexField<f64>>,
}

impl HolonomyMap {
    /// Exact on leaf points, bilinear on the grid elsewhere.
    pub fn apply(&self, w: C64) -> Result<C64> {
        if let Some(&(_, v)) = self.leaf_points.iter().find(|(p, _)| *p == w) {
            return Ok(v);
        }
        self.grid
            .as_ref()
            .and_then(|g| g.bilinear(w))
            .ok_or_else(|| Error::domain(format!("{w} is not a tabulated point of the holonomy")))
    }
}

/// `h_{z,z'}`; pass a grid to tabulate it beyond the leaves of `tau`, which
/// requires a global motion.
pub fn holonomy(m: &HolomorphicMotion, z: C64, z_target: C64, grid: Option<GridSpec>) -> Result<HolonomyMap> {
    for p in [z, z_target] {
        if !(p.norm() < 1.0) {
            return Err(Error::validation(format!("base point {p} is outside the unit disk")));
        }
    }
    let leaf_points = (0..m.tau().len())
        .map(|k| Ok((m.leaf(k, z)?, m.leaf(k, z_target)?)))
        .collect::<Result<Vec<_>>>()?;
    let grid = match grid {
        None => None,
        Some(spec) => {
            if !m.is_global() {
                return Err(Error::domain("fiber points off the leaves of a non-global motion have no holonomy"));
            }
            let values = spec
                .nodes()
                .map(|(_, _, w)| {
                    if z == z_target {
                        return Ok(w);
                    }
                    let a = m.invert_fiber(z, w)?;
                    m.phi(a, z_target)
                })
                .collect::<Result<Vec<_>>>()?;
            Some(ComplexField::new(spec, values)?)
        }
    };
    Ok(HolonomyMap { source: z, target: z_target, leaf_points, grid })
}

// Step for central differences of the fiber maps.
const STEP: f64 = 1e-5;

/// `mu^z(w)`: Beltrami coefficient of `h_{0,z}` at `w` in the fiber over 0,
/// by central differences. Global motions only.
pub fn mu_at(m: &HolomorphicMotion, z: C64, w: C64) -> Result<C64> {
    let zero = C64::new(0.0, 0.0);
    let h = |p: C64| -> Result<C64> { m.phi(m.invert_fiber(zero, p)?, z) };
    let fx = (h(w + STEP)? - h(w - STEP)?) / (2.0 * STEP);
    let iy = C64::new(0.0, STEP);
    let fy = (h(w + iy)? - h(w - iy)?) / (2.0 * STEP);
    let i = C64::new(0.0, 1.0);
    let (d, dbar) = ((fx - i * fy) * 0.5, (fx + i * fy) * 0.5);
    if d.norm() < 1e-12 {
        return Err(Error::Degenerate { re: w.re, im: w.im, reason: "|h_w| below 1e-12".into() });
    }
    Ok(dbar / d)
}

/// The Beltrami coefficient of the holonomy on a fiber grid, truncated to
/// the closed unit disk. `sup_outside` records what the truncation cut off.
#[derive(Clone, Debug)]
pub struct HolonomyBeltrami {
    pub field: BeltramiField<f64>,
    pub sup: f64,
    pub sup_outside: f64,
}

pub fn beltrami_of_holonomy(m: &HolomorphicMotion, z: C64, spec: GridSpec) -> Result<HolonomyBeltrami> {
    if !m.is_global() {
        return Err(Error::domain("the Beltrami coefficient of the holonomy needs a global motion"));
    }
    let mut sup: f64 = 0.0;
    let mut sup_outside: f64 = 0.0;
    let mut values = Vec::with_capacity(spec.len());
    for (i, j, w) in spec.nodes() {
        let interior = i > 0 && j > 0 && i + 1 < spec.n() && j + 1 < spec.n();
        let v = if interior { mu_at(m, z, w)? } else { C64::new(0.0, 0.0) };
        if w.norm() <= 1.0 {
            sup = sup.max(v.norm());
            values.push(v);
        } else {
            sup_outside = sup_outside.max(v.norm());
            values.push(C64::new(0.0, 0.0));
        }
    }
    if sup >= 1.0 {
        return Err(Error::validation(format!("holonomy at z = {z} is not quasiconformal: sup |mu| = {sup}")));
    }
    let field = BeltramiField::new(ComplexField::new(spec, values)?, sup)?;
    Ok(HolonomyBeltrami { field, sup, sup_outside })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shear_holonomy_formulas() {
        let m = HolomorphicMotion::builtin("shear").unwrap();
        let z = C64::new(0.2, 0.3);
        let zero = C64::new(0.0, 0.0);
        let spec = GridSpec::new(2.0, 64).unwrap();
        let forward = holonomy(&m, zero, z, Some(spec)).unwrap();
        let back = holonomy(&m, z, zero, Some(spec)).unwrap();
        for (i, j, w) in spec.nodes().step_by(37) {
            let f = forward.grid.as_ref().unwrap().get(i, j);
            assert!((f - (w + z * w.conj())).norm() < 1e-12);
            let b = back.grid.as_ref().unwrap().get(i, j);
            assert!((b - (w - z * w.conj()) / (1.0 - z.norm_sqr())).norm() < 1e-12);
        }
        let same = holonomy(&m, z, z, Some(spec)).unwrap();
        assert_eq!(same.grid.unwrap(), ComplexField::identity(spec));
        for &(p, q) in &forward.leaf_points {
            assert_eq!(back.apply(q).unwrap(), p);
        }
    }

    #[test]
    fn cocycle_on_grid() {
        let m = HolomorphicMotion::builtin("exp-shear").unwrap();
        let spec = GridSpec::new(2.0, 64).unwrap();
        let (a, b, c) = (C64::new(0.1, 0.0), C64::new(-0.3, 0.2), C64::new(0.0, 0.5));
        let ab = holonomy(&m, a, b, Some(spec)).unwrap();
        let bc = holonomy(&m, b, c, Some(spec)).unwrap();
        let ac = holonomy(&m, a, c, Some(spec)).unwrap();
        let mut worst: f64 = 0.0;
        for (i, j, w) in spec.nodes() {
            if w.norm() > 1.0 {
                continue;
            }
            let composed = bc.apply(ab.grid.as_ref().unwrap().get(i, j)).unwrap();
            worst = worst.max((composed - ac.grid.as_ref().unwrap().get(i, j)).norm());
        }
        // Bilinear interpolation of a real-linear map is exact up to rounding;
        // the exponential factor makes it only approximately so.
        assert!(worst < 1e-2, "{worst}");
        for k in 0..m.tau().len() {
            let p = m.leaf(k, a).unwrap();
            let q = ab.apply(p).unwrap();
            assert_eq!(bc.apply(q).unwrap(), ac.apply(p).unwrap());
        }
    }

    #[test]
    fn shear_coefficient_is_z() {
        let m = HolomorphicMotion::builtin("shear").unwrap();
        let spec = GridSpec::new(2.0, 64).unwrap();
        let z = C64::new(0.3, -0.2);
        let hb = beltrami_of_holonomy(&m, z, spec).unwrap();
        for (i, j, w) in spec.nodes() {
            if w.norm() <= 1.0 && i > 0 && j > 0 {
                assert!((hb.field.mu().get(i, j) - z).norm() < 1e-8);
            }
        }
        assert!((hb.sup_outside - z.norm()).abs() < 1e-8);
        let z0 = beltrami_of_holonomy(&m, C64::new(0.0, 0.0), spec).unwrap();
        assert!(z0.sup < 1e-10);
    }

    #[test]
    fn non_global_motion_has_no_grid_holonomy() {
        let m = HolomorphicMotion::builtin("shear").unwrap();
        let spec = m.to_spec();
        let local = HolomorphicMotion::from_spec(&crate::motion::MotionSpec { global: false, ..spec }).unwrap();
        let z = C64::new(0.1, 0.0);
        assert!(holonomy(&local, z, C64::new(0.0, 0.0), Some(GridSpec::new(2.0, 64).unwrap())).is_err());
        assert!(holonomy(&local, z, C64::new(0.0, 0.0), None).is_ok());
    }
}
