//! Numerical laboratory for singular Burgers vortices in strained
//! Navier-Stokes flow.

pub mod acceptance;
pub mod biot_savart;
pub mod config;
pub mod error;
pub mod evolution;
pub mod fd;
pub mod fft;
pub mod fields;
pub mod grid;
pub mod hermite;
pub mod interp;
pub mod io;
pub mod operators;
pub mod params;
pub mod quad;
pub mod selfsim;
pub mod semigroup;
pub mod special;
pub mod spectral;
pub mod spectrum;
pub mod weighted;

pub use error::{LabError, Result};
