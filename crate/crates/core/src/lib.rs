//! Dropout networks as approximate Bayesian models.
//!
//! The crate trains ordinary dropout networks and reads calibrated
//! predictive uncertainty out of them by keeping dropout switched on at test
//! time and averaging stochastic forward passes (MC dropout). Around that
//! core it ships an exact Gaussian-process baseline, dataset plumbing, the
//! experiment protocols (CO2 extrapolation, UCI-style regression benchmark,
//! rotated-digit classification) and a small foraging world where a dropout
//! Q-network explores by Thompson sampling.
//!
//! Module map:
//!
//! - [`numerics`]: matrices, Cholesky, counter-based random streams
//! - [`nn`]: network spec/params, forward passes, backprop, objectives
//! - [`optim`]: Adam, SGD with momentum, mini-batch training loop
//! - [`uncertainty`]: MC predictive moments, predictive log-likelihood,
//!   precision/weight-decay link, classification uncertainty
//! - [`gp`]: squared-exponential Gaussian-process regression
//! - [`data`]: CSV / IDX loaders, normalisation, splits, image rotation
//! - [`experiments`]: the experiment protocols
//! - [`rl`]: foraging world, replay, epsilon-greedy vs Thompson sampling
//! - [`cli`]: the `mcdrop` command line

pub mod cli;
pub mod data;
pub mod error;
pub mod experiments;
pub mod gp;
pub mod nn;
pub mod numerics;
pub mod optim;
pub mod rl;
pub mod uncertainty;

pub use error::{Error, Result};
pub use numerics::{Matrix, RngStream};
