//! Genus-g Schottky uniformization, Bers quasiforms, Zhu mode matrices and
//! vertex-algebra correlators on Riemann surfaces.

pub mod error;
pub mod forms;
pub mod schottky_core;
pub mod variational;
pub mod voa_correlators;
pub mod zhu_matrix;

pub use error::{Error, Result};
pub use forms::{BersPoles, PeriodMatrix, SurfaceFunctionSet};
pub use schottky_core::{ClassicalParams, Handle, SchottkyParams, TruncationPolicy};
