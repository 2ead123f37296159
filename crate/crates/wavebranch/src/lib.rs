//! Spectral solvers and branch continuation for steady periodic
//! gravity-wave integral equations.

pub mod branching;
pub mod continuation;
pub mod error;
pub mod linear;
pub mod operators;
pub mod series;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
