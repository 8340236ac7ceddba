//! Items, sets and set pairs, plus checkers for the structural properties a
//! matching score is expected to satisfy (permutation invariance, symmetry,
//! equivariance) and K-candidate selection.

mod checks;
mod types;

pub use checks::{
    check_equivariance, check_permutation_invariance, check_symmetry, select_best_candidate,
    CheckOutcome,
};
pub(crate) use types::squared_distance;
pub use types::{FeatureVector, ItemSet, Permutation, SetPair};

use crate::Scalar;

/// A real-valued matching score `f(X, Y)` over set pairs.
pub trait ScoreFunction<T: Scalar> {
    fn score(&self, z: &SetPair<T>) -> T;
}

impl<T: Scalar, F> ScoreFunction<T> for F
where
    F: Fn(&SetPair<T>) -> T,
{
    fn score(&self, z: &SetPair<T>) -> T {
        self(z)
    }
}
