//! Numerical tools for quasiconformal maps, holomorphic motions and laminar
//! currents in the bidisk.

pub mod approximation;
pub mod beltrami;
pub mod currents;
pub mod error;
pub mod expr;
pub mod field_ops;
pub mod io;
pub mod lamination;
pub mod motion;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision aliases for the common case.
pub type C64 = num_complex::Complex<f64>;
pub type Field64 = field_ops::ComplexField<f64>;
