//! Kernel set-to-set matching with negative sampling, and calculators for the
//! generalization bounds of pairwise matching risk.
//!
//! A matching score `f(X, Y)` rates how well two unordered sets of feature
//! vectors belong together. Scores are trained from positive pairs only;
//! negatives are made by recombining the two sides of different positives.
//! The crate provides:
//!
//! - [`set_core`]: items, sets, pairs, permutations and property checkers.
//! - [`kernels`]: mean-embedding set kernels, the symmetrised pair kernel,
//!   Gram matrices and score functions in an RKHS ball.
//! - [`losses`]: logistic and margin surrogates, empirical and Monte Carlo risks.
//! - [`sampling`]: a synthetic cluster generator and negative sampling.
//! - [`learner`]: projected gradient descent over the RKHS ball.
//! - [`bounds`]: Rademacher complexities and the margin / RKHS deviation bounds.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix the scalar to `f64`.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod kernels;
pub mod learner;
pub mod losses;
pub mod sampling;
mod scalar;
pub mod set_core;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type FeatureVector64 = set_core::FeatureVector<f64>;
pub type ItemSet64 = set_core::ItemSet<f64>;
pub type SetPair64 = set_core::SetPair<f64>;
pub type MatchingDataset64 = sampling::MatchingDataset<f64>;
pub type BaseKernel64 = kernels::BaseKernel<f64>;
pub type PairKernel64 = kernels::PairKernel<f64>;
pub type GramMatrix64 = kernels::GramMatrix<f64>;
pub type RkhsScoreFunction64 = kernels::RkhsScoreFunction<f64>;
pub type Surrogate64 = losses::Surrogate<f64>;
pub type TrainConfig64 = learner::TrainConfig<f64>;
pub type BoundReport64 = bounds::BoundReport<f64>;

pub type ItemSet32 = set_core::ItemSet<f32>;
pub type SetPair32 = set_core::SetPair<f32>;
pub type RkhsScoreFunction32 = kernels::RkhsScoreFunction<f32>;
