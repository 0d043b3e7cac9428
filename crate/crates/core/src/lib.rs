//! Affine deformations of Fuchsian surface groups: Margulis invariants,
//! affine twist parameters, and twist derivatives of geodesic length.

pub mod cocycle;
mod dd;
pub mod error;
pub mod fuchsian;
pub mod glue;
pub mod lorentz;
pub mod sample;
pub mod torus;
pub mod twistflow;

pub use error::{Error, Result};
