//! Grid fields and the free-space Cauchy and Beurling transforms.

mod field;
mod grid;
mod kernel;
mod transform;

pub use field::{lp_norm, ComplexField, Disk};
pub use grid::{CubicStencil, GridSpec};
pub use kernel::{beurling_cell, cauchy_cell};
pub use transform::{
    beurling_transform, cauchy_transform, check_support, periodic_beurling_transform, plan_for, CauchySum,
    TransformPlan, SUPPORT_TOLERANCE,
};
