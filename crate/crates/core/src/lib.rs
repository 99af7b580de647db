//! Parallel affine transformation tuning (PATT) for MCMC.
//!
//! Base samplers run in a latent space linked to the sample space by an
//! affine map `α(y) = W y + c`. Several chains pool their samples at
//! scheduled update times to refit `α` so the latent target approaches
//! isotropic position.

pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod patt;
pub mod rng;
pub mod samplers;
pub mod targets;
pub mod transform;

pub use error::{Error, Result};
