//! Quantum pulse-position-modulation detection numerics.

pub mod constellation;
pub mod detect;
pub mod error;
pub mod glauber;
pub mod gus;
pub mod linalg;
pub mod result;
pub mod sdpa;
pub mod srm;

pub use error::{Error, Result};
