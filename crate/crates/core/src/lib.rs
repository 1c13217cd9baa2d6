//! Noisy shotgun-sequencing laboratory.
//!
//! The crate simulates circular i.i.d. genomes and noisy fixed-length reads,
//! computes the closed-form alignment and coverage thresholds, cleans reads
//! by clustering K-mers into jointly typical groups and taking a per-column
//! maximum-likelihood consensus, and assembles reads with a greedy
//! approximate-overlap merger. The [`harness`] module ties the stages into
//! seeded trials and parameter sweeps.

// `!(x > 0.0)` style checks are kept on purpose: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod correct;
pub mod error;
pub mod genome;
pub mod harness;
pub mod info;
pub mod io;
pub mod rng;

pub use error::{Error, Result};
pub use genome::{BaseDistribution, Genome, NoiseChannel, Read, ReadSet};
