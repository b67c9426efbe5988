//! Simulator and attack harness for the MIRAGE randomized last-level cache.
//!
//! The crate provides:
//! - [`cipher`]: PRESENT-80 / PRINCE-128 set-index derivation, including a
//!   bug-emulation mode that reproduces a faulty binary-to-integer conversion
//!   collapsing the index onto the low 16 address bits.
//! - [`cache`]: the MIRAGE state machine (skewed tag store, fully associative
//!   data store, load-balanced install, deterministic global eviction, SAE
//!   detection) plus a classical set-associative baseline.
//! - [`analytics`]: closed-form bucket-and-ball evaluators (birth-death step,
//!   exact binomial / Poisson spill probabilities, birthday bounds) and a
//!   Monte Carlo bucket-and-ball simulator to cross-check them.
//! - [`attacks`]: cache-occupancy prime/probe, the covert-channel protocol,
//!   and template-based fingerprinting with a Gaussian ML classifier.
//! - [`harness`]: config files, run manifests, CSV emission and SVG plots for
//!   the CLI front end.

pub mod analytics;
pub mod attacks;
pub mod cache;
pub mod cipher;
pub mod error;
pub mod harness;
pub mod seed;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
