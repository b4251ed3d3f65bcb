//! Sequential Bayesian inference for a diffusing 1-D latent state.
//!
//! A hidden state performs free Brownian motion with diffusion constant D
//! and is watched through noisy snapshots `x_i` at spacing `eps`. The
//! posterior density is propagated by alternating a heat-kernel spread with
//! an evidence reweighting and renormalizing. Four backends implement the
//! same update and check each other:
//!
//! - [`chain`]: direct discrete chain, one kernel convolution and one
//!   multiplicative reweighting per step. Works for any potential.
//! - [`pde`]: symmetric split-step integrator for the equivalent
//!   imaginary-time evolution, tracking the unnormalized mass.
//! - [`analytic`]: exact closed form for the quadratic evidence cost,
//!   a tilted and shifted Hermite-mode mixture.
//! - [`fock`]: truncated ladder-operator evolution of the mode
//!   coefficients, integrated in the relaxation frame.
//!
//! The [`scenario`] module generates synthetic data and runs cross-backend
//! comparisons; [`verify`] bundles the identities the backends rest on into
//! deterministic pass/fail suites.

pub mod analytic;
pub mod chain;
pub mod config;
pub mod csvio;
pub mod error;
pub mod fock;
pub mod grid;
pub mod hermite;
pub mod observations;
pub mod pde;
pub mod rng;
pub mod scenario;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{l1_distance, Density, Grid, ModelParams};
pub use observations::{ObservationSeries, Potential};
pub use scenario::{Backend, BackendRun, ComparisonReport, PriorSpec};
