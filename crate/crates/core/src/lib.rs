//! Optimal quantum estimation networks.
//!
//! Operators carry labelled tensor factors, channels and processes are
//! quantum combs, measurements on them are testers, and optimal testers for
//! a Bayesian estimation task come from a semidefinite program.

pub mod catalog;
pub mod covariant;
pub mod error;
pub mod estimation;
pub mod io;
pub mod network;
pub mod operator;
pub mod product_rule;
pub mod scalar;
pub mod sdp;

pub use error::{Error, Result};
pub use scalar::{Complex, Real};

pub type Operator = operator::LabeledOperator<f64>;
pub type Comb = network::QuantumComb<f64>;
pub type CombTester = network::Tester<f64>;
pub type Problem = estimation::EstimationProblem<f64>;
pub type Solution = sdp::SdpSolution<f64>;
