//! Episodic Monte Carlo posterior policy iteration.

pub mod episodic;
pub mod eval;
pub mod gaussian;
pub mod policy;

pub use episodic::{ppi_iteration, run_episodic, run_episodic_with, EpisodicConfig, IterationRecord, IterationTrace};
pub use eval::{Evaluator, Objective, Sequential};
pub use gaussian::gaussian_quadratic_posterior;
pub use policy::{m_projection, Policy, Projection, LOW_ESS};
