//! Age-optimal best-arm identification over restless Markov edge nodes.
//!
//! The crate models each edge node as a hidden Markov chain obtained by
//! exponentially tilting a shared base matrix, simulates the restless
//! environment, and identifies the node with the smallest average Age of
//! Information using regeneration-block estimators, an LUCB learner and a
//! bisection outer loop on the AoI ratio.

pub mod bounds;
pub mod env;
pub mod error;
pub mod harness;
pub mod instance;
pub mod learner;
pub mod markov;
pub mod regen;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix64 = markov::StochasticMatrix<f64>;
pub type Matrix32 = markov::StochasticMatrix<f32>;
pub type Instance = instance::ProblemInstance<f64>;
pub type Instance32 = instance::ProblemInstance<f32>;
pub type Oracle = instance::OracleReport<f64>;
pub type Arm = instance::ArmModel<f64>;
