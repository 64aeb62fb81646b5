//! Two-network opinion dynamics: spectral classification, step-size
//! regions, simulation, and estimation of the appraisal network.

pub mod error;
pub mod estimate;
pub mod fixtures;
pub mod io;
pub mod linalg;
pub mod netcore;
pub mod reproduce;
pub mod simulate;
pub mod spectral;
pub mod stepsize;

pub use error::{Error, Result};
pub use nalgebra;
