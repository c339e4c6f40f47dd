//! Monte Carlo posterior policy iteration.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every numerical piece
//! of the method: Gibbs importance weights and the temperature strategies that
//! pick the inverse temperature, Gaussian-process action priors built on the
//! matrix normal distribution and its feature approximations, the episodic
//! policy iteration loop and the receding-horizon controller that shifts the
//! posterior between planning windows. Anything touching files, threads or the
//! command line lives in the `mcppi` companion crate.
#![no_std]

// f64 math comes from `num_traits::Float`; once std is linked anywhere in the
// build the inherent methods win and those imports go unused.

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod envs;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod mpc;
pub mod ppi;
pub mod priors;
pub mod scalar;
pub mod spectral;
pub mod temperature;
pub mod weights;

pub use error::{Error, Result};
pub use nalgebra::{DMatrix, DVector};
pub use rand_chacha::ChaCha8Rng as Rng;
