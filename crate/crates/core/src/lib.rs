//! Stochastic Krasnosel'skii–Mann (S-KM) iteration for sample average
//! approximation problems whose training samples come from a dependent,
//! ergodic process.
//!
//! The crate is organised around five pieces:
//!
//! * [`operators`]: proximal, gradient and reflection building blocks composed
//!   into nonexpansive operators (SGD, PPA, PGD, DRS, relaxed PRS).
//! * [`processes`]: autoregressive and finite Markov chain data sources, the
//!   SP / SP-m / MR-s sampling strategies and mixing diagnostics.
//! * [`engine`]: the S-KM loop with ergodic averaging, δ-stopping and
//!   per-iteration metrics.
//! * [`bounds`]: closed-form evaluation of the finite-sample guarantees.
//! * [`reference`]: a full-batch accelerated proximal gradient solver used as
//!   an oracle for regret and distance metrics.
//!
//! All numerics are generic over a [`Real`] scalar (`f32` or `f64`). The
//! aliases at the crate root fix the scalar to `f64`, which is what the
//! harness uses.

pub mod bounds;
pub mod engine;
mod error;
pub mod least_squares;
pub mod operators;
mod point;
pub mod processes;
pub mod reference;
mod scalar;

pub use error::{Error, Result};
pub use least_squares::{CompositeObjective, LeastSquares};
pub use point::{Point, Sample};
pub use scalar::Real;

pub type Point64 = Point<f64>;
pub type Sample64 = Sample<f64>;
pub type FunctionSpec64 = operators::FunctionSpec<f64>;
pub type OperatorSpec64 = operators::OperatorSpec<f64>;
pub type ProcessSpec64 = processes::ProcessSpec<f64>;
pub type RunRecord64 = engine::RunRecord<f64>;

pub type Point32 = Point<f32>;
pub type Sample32 = Sample<f32>;
pub type OperatorSpec32 = operators::OperatorSpec<f32>;
