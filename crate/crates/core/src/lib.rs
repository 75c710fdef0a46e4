//! Bayesian spike-and-slab variable selection and h-step forecasting for
//! linear regression with lagged covariates and AR(q) errors.
//!
//! The pipeline: build a lag-expanded, standardized design from a time
//! series ([`data`]), select covariates with a spike-and-slab Gibbs sampler
//! ([`sampler`], [`twostage`]), select lags of the residual AR process from
//! the first-stage residuals, and forecast with an AR error correction on a
//! rolling origin ([`forecaster`]). The analytic per-coefficient posterior
//! (a two-component Student-t mixture) lives in [`posterior`] and supports
//! fast screening without MCMC. [`simharness`] generates synthetic scenarios
//! and drives selection/prediction accuracy experiments; [`metrics`] holds
//! the evaluation metrics.
//!
//! The crate is `no_std`-compatible (requires `alloc`); all IO, CSV formats
//! and the CLI live in the companion `ssarx-cli` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod armodel;
pub mod data;
pub mod error;
pub mod forecaster;
pub mod metrics;
pub mod posterior;
pub mod rng;
pub mod sampler;
pub mod simharness;
pub mod twostage;

pub use error::{Error, Result};
