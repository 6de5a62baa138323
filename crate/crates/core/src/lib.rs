//! Scattering of TM waves by metallic inclusions with sign-changing
//! permittivity, including the critical regime where corners trap energy.

pub mod error;
pub mod specfun;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub mod materials;
pub mod corner_modes;
pub mod mesh;
pub mod pml;
pub mod assembly;
pub mod postprocess;
pub mod config;
pub mod driver;
