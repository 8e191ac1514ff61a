//! Numerical laboratory for the complex anisotropic Calderón problem on
//! layered box domains.

pub mod admittivity;
pub mod dtn;
pub mod error;
pub mod experiments;
pub mod fem;
pub mod fit;
pub mod fundamental;
pub mod geometry;
pub mod green;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod probes;
pub mod quadrature;
pub mod scalar;

pub use error::{Error, Result};
pub use num_complex::Complex64;
