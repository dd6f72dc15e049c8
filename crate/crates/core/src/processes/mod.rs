//! Dependent data sources, sampling strategies and mixing diagnostics.
//!
//! Generators own mutable RNG state and are single-owner; the diagnostics in
//! [`mixing`] are pure functions.

mod ar;
mod markov;
pub mod mixing;
mod rng;
mod sampling;

pub use ar::{ar_step, ArGenerator, ArProcess};
pub use markov::{markov_step, MarkovChain};
pub use mixing::{
    mixing_profile, phi_coefficient, phi_coefficients, stationary_distribution, tv_distance,
    MixingProfile,
};
pub use rng::{rng_from_seed, split_rng, split_seed, SeedRng};
pub use sampling::{
    draw_training_set, ProcessSpec, ProcessState, SamplingStrategy, TrainingSet, Trajectory,
};
