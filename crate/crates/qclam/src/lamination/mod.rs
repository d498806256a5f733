//! Laminations by the graphs of a holomorphic motion: the straightening
//! chart, the directed (1,0) form, leafwise function spaces and an
//! extension of leafwise functions off the leaves.

mod extension;
mod functions;

pub use extension::{c1_extend, C1Extension};
pub use functions::{
    extend_constant_along_leaves, w1p_norm, FormulaFunction, LeafFunction, LeafGrid, Smoothness,
    StraightenedFunction, DEFAULT_DELTA,
};

use crate::error::{Error, Result};
use crate::field_ops::{ComplexField, GridSpec};
use crate::motion::{disk_samples, HolomorphicMotion};
use crate::C64;

/// The lamination of the bidisk by the leaves of a motion, with the fiber
/// grid used when tabulating fiber maps.
#[derive(Clone, Debug)]
pub struct Lamination {
    motion: HolomorphicMotion,
    fiber: GridSpec,
}

impl Lamination {
    /// Uses a 64x64 fiber grid over `[-2, 2]^2`.
    pub fn new(motion: HolomorphicMotion) -> Self {
        Self { motion, fiber: GridSpec::new(2.0, 64).expect("valid default grid") }
    }

    pub fn with_fiber_grid(motion: HolomorphicMotion, fiber: GridSpec) -> Self {
        Self { motion, fiber }
    }

    pub fn motion(&self) -> &HolomorphicMotion {
        &self.motion
    }

    pub fn fiber_grid(&self) -> GridSpec {
        self.fiber
    }

    pub fn tau(&self) -> &[C64] {
        self.motion.tau()
    }
}

/// `Phi(z, w) = (z, alpha)` where `(z, w)` lies on the leaf through `alpha`,
/// tabulated on the fiber grid over each sampled base point.
#[derive(Clone, Debug)]
pub struct StraighteningChart {
    motion: HolomorphicMotion,
    z_samples: Vec<C64>,
    /// Leaf labels at the fiber grid nodes, one field per base sample.
    tables: Vec<ComplexField<f64>>,
}

/// Base samples used by [`straighten`].
pub fn default_chart_samples() -> Vec<C64> {
    disk_samples(3, 8, 0.9)
}

pub fn straighten(lam: &Lamination) -> Result<StraighteningChart> {
    straighten_at(lam, &default_chart_samples())
}

/// Tabulates the chart over the given base points. Needs a global motion.
pub fn straighten_at(lam: &Lamination, z_samples: &[C64]) -> Result<StraighteningChart> {
    let m = lam.motion();
    if !m.is_global() {
        return Err(Error::domain("straightening needs a global motion"));
    }
    let spec = lam.fiber_grid();
    let tables = z_samples
        .iter()
        .map(|&z| {
            if !(z.norm() < 1.0) {
                return Err(Error::validation(format!("base point {z} is outside the unit disk")));
            }
            let vals = spec.nodes().map(|(_, _, w)| m.invert_fiber(z, w)).collect::<Result<Vec<_>>>()?;
            ComplexField::new(spec, vals)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StraighteningChart { motion: m.clone(), z_samples: z_samples.to_vec(), tables })
}

impl StraighteningChart {
    pub fn z_samples(&self) -> &[C64] {
        &self.z_samples
    }

    /// Leaf label of `(z, w)` by exact fiber inversion.
    pub fn forward(&self, z: C64, w: C64) -> Result<C64> {
        self.motion.invert_fiber(z, w)
    }

    /// `Phi^{-1}(z, alpha) = (z, phi_alpha(z))`; returns the `w` coordinate.
    pub fn inverse(&self, z: C64, alpha: C64) -> Result<C64> {
        self.motion.phi(alpha, z)
    }

    /// Leaf label over the `k`-th base sample by bilinear interpolation.
    pub fn forward_tabulated(&self, k: usize, w: C64) -> Result<C64> {
        self.tables[k]
            .bilinear(w)
            .ok_or_else(|| Error::domain(format!("{w} is outside the tabulated fiber")))
    }

    /// Largest `|Phi_tab(Phi^{-1}(z, alpha)) - alpha|` over the base samples
    /// and `tau`. Exact forward maps would give 0.
    pub fn round_trip_error(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (k, &z) in self.z_samples.iter().enumerate() {
            for &a in self.motion.tau() {
                let w = self.inverse(z, a)?;
                worst = worst.max((self.forward_tabulated(k, w)? - a).norm());
            }
        }
        Ok(worst)
    }

    pub fn fiber_grid(&self) -> GridSpec {
        self.tables.first().map(|t| t.spec()).unwrap_or_default()
    }
}

/// `dl = dw - phi'_alpha(z) dz` at a point of the leaf through `alpha`,
/// normalized by `dl(0, 1) = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectedForm {
    pub dz: C64,
    pub dw: C64,
}

impl DirectedForm {
    /// Evaluates the form on a tangent vector `(v_z, v_w)`.
    pub fn apply(&self, v: [C64; 2]) -> C64 {
        self.dz * v[0] + self.dw * v[1]
    }

    /// The leaf tangent `(1, phi')` the form was built from.
    pub fn tangent(&self) -> [C64; 2] {
        [C64::new(1.0, 0.0), -self.dz]
    }
}

pub fn directed_form(lam: &Lamination, z: C64, alpha: C64) -> Result<DirectedForm> {
    let slope = lam.motion().leaf_slope(alpha, z)?;
    Ok(DirectedForm { dz: -slope, dw: C64::new(1.0, 0.0) })
}
