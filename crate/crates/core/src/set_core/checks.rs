use rand::Rng;

use super::{ItemSet, Permutation, ScoreFunction, SetPair};
use crate::error::{Error, Result};
use crate::Scalar;

/// Result of a property check: whether it held and the worst deviation seen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOutcome<T> {
    pub holds: bool,
    pub max_deviation: T,
}

impl<T: Scalar> CheckOutcome<T> {
    fn from_deviation(max_deviation: T) -> Self {
        Self {
            holds: max_deviation <= T::identity_tolerance(),
            max_deviation,
        }
    }
}

/// Samples `trials` pairs of within-set permutations `(pi_x, pi_y)` and
/// compares `f(pi_x X, pi_y Y)` against `f(X, Y)`.
pub fn check_permutation_invariance<T, F, R>(
    f: &F,
    z: &SetPair<T>,
    trials: usize,
    rng: &mut R,
) -> CheckOutcome<T>
where
    T: Scalar,
    F: ScoreFunction<T> + ?Sized,
    R: Rng + ?Sized,
{
    let base = f.score(z);
    let mut worst = T::zero();
    for _ in 0..trials.max(1) {
        let px = Permutation::random(z.first.len(), rng);
        let py = Permutation::random(z.second.len(), rng);
        // sizes match by construction
        let permuted = SetPair {
            first: z.first.apply_permutation(&px).expect("matching size"),
            second: z.second.apply_permutation(&py).expect("matching size"),
        };
        let dev = (f.score(&permuted) - base).abs();
        if !(dev <= worst) {
            worst = dev;
        }
    }
    CheckOutcome::from_deviation(worst)
}

/// Compares `f(X, Y)` against `f(Y, X)`.
pub fn check_symmetry<T, F>(f: &F, z: &SetPair<T>) -> CheckOutcome<T>
where
    T: Scalar,
    F: ScoreFunction<T> + ?Sized,
{
    let dev = (f.score(z) - f.score(&z.swapped())).abs();
    CheckOutcome::from_deviation(if dev.is_nan() { T::infinity() } else { dev })
}

/// Checks `g(p X, Y) == p g(X, Y)` elementwise for a set-to-set map `g` whose
/// output is indexed like `X`.
pub fn check_equivariance<T, G>(
    g: G,
    x: &ItemSet<T>,
    y: &ItemSet<T>,
    p: &Permutation,
) -> Result<CheckOutcome<T>>
where
    T: Scalar,
    G: Fn(&ItemSet<T>, &ItemSet<T>) -> ItemSet<T>,
{
    let lhs = g(&x.apply_permutation(p)?, y);
    let rhs = g(x, y).apply_permutation(p).map_err(|_| {
        Error::InvalidPermutation("map output is not indexed like its first argument".into())
    })?;
    if lhs.len() != rhs.len() {
        return Err(Error::InvalidPermutation(format!(
            "map output sizes differ: {} vs {}",
            lhs.len(),
            rhs.len()
        )));
    }
    let mut worst = T::zero();
    for (a, b) in lhs.iter().zip(rhs.iter()) {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                got: b.dim(),
            });
        }
        for (&u, &v) in a.as_slice().iter().zip(b.as_slice()) {
            let dev = (u - v).abs();
            if !(dev <= worst) {
                worst = dev;
            }
        }
    }
    Ok(CheckOutcome::from_deviation(worst))
}

/// Index of the candidate `Y_k` maximising `f(X, Y_k)`; ties go to the lowest index.
pub fn select_best_candidate<T, F>(
    f: &F,
    x: &ItemSet<T>,
    candidates: &[ItemSet<T>],
) -> Result<usize>
where
    T: Scalar,
    F: ScoreFunction<T> + ?Sized,
{
    if candidates.is_empty() {
        return Err(Error::EmptyInput("candidate list"));
    }
    let mut best: Option<(usize, T)> = None;
    for (k, y) in candidates.iter().enumerate() {
        let s = f.score(&SetPair::new(x.clone(), y.clone())?);
        match best {
            Some((_, b)) if !(s > b) => {}
            _ => best = Some((k, s)),
        }
    }
    Ok(best.map_or(0, |(k, _)| k))
}
