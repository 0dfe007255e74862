//! Approximate solvers for low-dimensional LP-type problems (minimum enclosing
//! ball, hard-margin linear SVM, bounded LP, bounded SDP) over point streams.
//!
//! Input points are snapped onto a metric net whose cells form the universe of
//! mergeable ℓ0 sketches. A Clarkson-style multiplicative-weights loop draws
//! weighted samples through those sketches, solves each sample exactly, and
//! stops once no snapped point violates the sample's solution. Because every
//! sketch is linear, the same loop runs over insert-only streams, strict
//! turnstile streams and data partitioned across machines.
//!
//! Module map:
//! - [`sketch`]: ℓ0 estimator and sampler (randomized and exact backends)
//! - [`net`]: lattice-plus-radial-levels net mapping points to sketch indices
//! - [`solver`]: problem abstraction, weight oracle and the sampling loop
//! - [`problems`]: MEB, SVM, bounded LP, bounded SDP plugins and reference oracles
//! - [`streams`]: multipass and strict turnstile execution
//! - [`distributed`]: coordinator / parallel model simulation with load metering

pub mod distributed;
pub mod error;
pub mod net;
pub mod problems;
pub mod sketch;
pub mod solver;
pub mod streams;

pub use error::{Error, Result};
pub use solver::{
    LpTypeProblem, SketchBackend, Solution, SolveOutcome, SolverParams, Universe, WeightOracle,
};
