//! Gradient temporal-difference policy evaluation with ℓ1 regularization.
//!
//! The crate is organised bottom-up:
//!
//! - [`mdp`]: finite Markov reward processes, state distributions and
//!   behavior/target policy pairs.
//! - [`objectives`]: exact expectation matrices and the MSBE, MSPBE and NEU
//!   objectives with their gradients.
//! - [`prox`]: the soft-threshold operator.
//! - [`learners`]: online GTD, GTD2, TDC and TD(0), their soft-thresholded
//!   variants, and batch iterative soft thresholding.
//! - [`envs`]: the random-walk chain and Baird's star as exact models plus
//!   seeded samplers.
//! - [`harness`]: seeded multi-run experiments, CSV traces and summaries.
//!
//! ```
//! use gtd_ist::envs::{build_chain, ChainConfig};
//! use gtd_ist::objectives::rmspbe;
//!
//! let (env, _sampler) = build_chain(&ChainConfig::default()).unwrap();
//! let star = env.td_solution().unwrap();
//! assert!(rmspbe(&star, &env.expectations).unwrap() < 1e-10);
//! ```

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod envs;
pub mod error;
pub mod harness;
pub mod learners;
pub mod linalg;
pub mod mdp;
pub mod objectives;
pub mod prox;

pub use error::{Error, Result};
