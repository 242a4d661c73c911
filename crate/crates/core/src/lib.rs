//! Reconstruction geometry of symmetric dynamical systems whose reduced
//! dynamics is periodic: phase map, invariant tori and their frequencies,
//! petal/flower fibration data, and the extra integrals coming from the
//! Weyl quotient.

pub mod config;
pub mod dynsys;
pub mod error;
pub mod integrate;
pub mod liegroup;
pub mod reconstruct;
pub mod verify;

pub use error::{Error, Result};
