//! Nonperturbative dynamical maps of the spin–boson model reconstructed from resummed
//! time-convolutionless generators, with the rotating-wave model as an exact benchmark.

pub mod analysis;
pub mod bath;
pub mod cli;
pub mod error;
pub mod generators;
pub mod linalg;
pub mod ode;
pub mod quad;
pub mod reconstruction;
pub mod rwa;
pub mod sbm;

pub use error::{Error, Result};
pub use num_complex::Complex64;
