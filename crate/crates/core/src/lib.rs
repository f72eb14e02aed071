//! Heun-family integrators for scalar SDEs and the experiments used to
//! benchmark them.
//!
//! * [`increments`]: the step integrals `z1`, `z2`, `z3` and their composition.
//! * [`model`]: problem definitions, the benchmark model and its equilibrium.
//! * [`schemes`]: the single-step update rules.
//! * [`convergence`], [`stability`], [`equilibrium`]: the three benchmark labs.
//! * [`report`], [`manifest`], [`cli`]: CSV output, run configuration and the
//!   command-line driver.

pub mod cli;
pub mod convergence;
pub mod equilibrium;
pub mod error;
pub mod fit;
pub mod increments;
pub mod manifest;
pub mod model;
pub mod moments;
pub mod parallel;
pub mod report;
pub mod rng;
pub mod schemes;
pub mod stability;
pub mod validate;

pub use error::{Error, Result};
pub use increments::{
    compose, make_increment, sample_triple, GaussianTriple, NoiseIncrement, NoiseNeeds,
    Z3Representation,
};
pub use model::{
    benchmark_problem, convert_drift, equilibrium_density, sample_equilibrium,
    validation_problem, CalculusConvention, Coefficients, EquilibriumSpec, SdeProblem,
};
pub use rng::RandomStream;
pub use schemes::{dispatch, SchemeId, StepInput, Stepper};
