//! IMPES two-phase flow on rectangular grids that do not fit the permeability interface.
//!
//! Pressure uses an immersed rotated-Q1 finite element, velocity is recovered locally in the
//! lowest-order Raviart–Thomas space, and saturation is advanced on vertex-centred dual volumes.

pub mod cli;
pub mod error;
pub mod fem;
pub mod field;
pub mod fluid;
pub mod impes;
pub mod linalg;
pub mod mesh;
pub mod pressure;
pub mod transport;
pub mod velocity;
pub mod verify;

pub use error::{Error, Result};
