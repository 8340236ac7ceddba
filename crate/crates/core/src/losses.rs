//! Pairwise ranking losses `l(f, Z+, Z-) = phi(f(Z+) - f(Z-))` and the risks
//! built from them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sampling::{MatchingDataset, PairGenerator};
use crate::set_core::{ScoreFunction, SetPair};
use crate::Scalar;

/// The convex surrogate `phi` applied to score differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Surrogate<T> {
    /// `log(1 + exp(-t))`
    Logistic,
    /// Piecewise-linear rho-margin loss.
    Margin { rho: T },
}

impl<T: Scalar> Surrogate<T> {
    pub fn margin(rho: T) -> Result<Self> {
        check_rho(rho)?;
        Ok(Self::Margin { rho })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Logistic => Ok(()),
            Self::Margin { rho } => check_rho(rho),
        }
    }

    #[inline]
    pub fn phi(&self, t: T) -> T {
        match *self {
            Self::Logistic => logistic_phi(t),
            Self::Margin { rho } => margin_phi_unchecked(t, rho),
        }
    }

    /// Derivative of `phi`. For the margin loss this is the subgradient
    /// `-1/rho` on the open interval `(0, rho)` and `0` elsewhere; at the two
    /// kinks the flat side's slope is used.
    #[inline]
    pub fn derivative(&self, t: T) -> T {
        match *self {
            Self::Logistic => logistic_derivative(t),
            Self::Margin { rho } => {
                if t > T::zero() && t < rho {
                    -rho.recip()
                } else {
                    T::zero()
                }
            }
        }
    }

    pub fn lipschitz(&self) -> T {
        lipschitz_constant(self)
    }
}

fn check_rho<T: Scalar>(rho: T) -> Result<()> {
    if !(rho > T::zero()) || !rho.is_finite() {
        return Err(invalid(
            "rho",
            format!("margin must be positive and finite, got {rho}"),
        ));
    }
    Ok(())
}

/// `log(1 + exp(-t))` without overflow for large `|t|`.
#[inline]
pub fn logistic_phi<T: Scalar>(t: T) -> T {
    // max(-t, 0) + log1p(exp(-|t|))
    (-t).max(T::zero()) + (-t.abs()).exp().ln_1p()
}

/// `d/dt log(1 + exp(-t)) = -1 / (1 + exp(t))`.
#[inline]
pub fn logistic_derivative<T: Scalar>(t: T) -> T {
    if t >= T::zero() {
        let e = (-t).exp();
        -e / (T::one() + e)
    } else {
        -(T::one() + t.exp()).recip()
    }
}

/// rho-margin loss: `1` for `t <= 0`, `1 - t/rho` on `[0, rho]`, `0` for `t >= rho`.
pub fn margin_phi<T: Scalar>(t: T, rho: T) -> Result<T> {
    check_rho(rho)?;
    Ok(margin_phi_unchecked(t, rho))
}

#[inline]
fn margin_phi_unchecked<T: Scalar>(t: T, rho: T) -> T {
    if t >= rho {
        T::zero()
    } else if t <= T::zero() {
        T::one()
    } else {
        T::one() - t / rho
    }
}

/// Lipschitz constant `L` of `phi`: 1 for logistic, `1/rho` for the margin loss.
pub fn lipschitz_constant<T: Scalar>(spec: &Surrogate<T>) -> T {
    match *spec {
        Surrogate::Logistic => T::one(),
        Surrogate::Margin { rho } => rho.recip(),
    }
}

/// `phi(f(Z+) - f(Z-))`
pub fn pair_loss<T, F>(f: &F, z_pos: &SetPair<T>, z_neg: &SetPair<T>, spec: &Surrogate<T>) -> T
where
    T: Scalar,
    F: ScoreFunction<T> + ?Sized,
{
    spec.phi(f.score(z_pos) - f.score(z_neg))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskKind {
    EmpiricalSurrogate,
    EmpiricalMargin,
    EmpiricalRankingError,
    McExpectedSurrogate,
    McExpectedRankingError,
}

/// A risk value together with what produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskEstimate<T> {
    pub value: T,
    pub kind: RiskKind,
    pub positives: usize,
    pub negatives: usize,
    /// Standard error of Monte Carlo estimates (two-sample U-statistic,
    /// first-order variance); `None` for empirical risks.
    pub std_error: Option<T>,
}

/// Mean of `phi(s+_i - s-_j)` over all positive/negative index combinations.
pub fn risk_from_scores<T: Scalar>(pos: &[T], neg: &[T], spec: &Surrogate<T>) -> T {
    grid_mean(pos, neg, |t| spec.phi(t))
}

/// Fraction of combinations with `s+_i - s-_j <= 0` (a tie counts as an error).
pub fn ranking_error_from_scores<T: Scalar>(pos: &[T], neg: &[T]) -> T {
    grid_mean(pos, neg, zero_one)
}

#[inline]
fn zero_one<T: Scalar>(t: T) -> T {
    if t <= T::zero() {
        T::one()
    } else {
        T::zero()
    }
}

fn grid_mean<T: Scalar>(pos: &[T], neg: &[T], loss: impl Fn(T) -> T) -> T {
    let mut total = T::zero();
    for &p in pos {
        let mut row = T::zero();
        for &n in neg {
            row += loss(p - n);
        }
        total += row;
    }
    total / T::from_usize_lossy(pos.len() * neg.len())
}

/// Grid mean plus the first-order standard error `sqrt(var(row means)/n+ + var(col means)/n-)`.
fn grid_mean_with_se<T: Scalar>(pos: &[T], neg: &[T], loss: impl Fn(T) -> T) -> (T, T) {
    let (np, nn) = (pos.len(), neg.len());
    let mut rows = vec![T::zero(); np];
    let mut cols = vec![T::zero(); nn];
    for (i, &p) in pos.iter().enumerate() {
        for (j, &n) in neg.iter().enumerate() {
            let l = loss(p - n);
            rows[i] += l;
            cols[j] += l;
        }
    }
    let total: T = rows.iter().copied().sum();
    let mean = total / T::from_usize_lossy(np * nn);
    let var_of = |sums: &[T], denom: usize| -> T {
        let k = sums.len();
        if k < 2 {
            return T::zero();
        }
        let d = T::from_usize_lossy(denom);
        let ss: T = sums
            .iter()
            .map(|&s| {
                let e = s / d - mean;
                e * e
            })
            .sum();
        ss / T::from_usize_lossy(k - 1)
    };
    let var =
        var_of(&rows, nn) / T::from_usize_lossy(np) + var_of(&cols, np) / T::from_usize_lossy(nn);
    (mean, var.sqrt())
}

fn require_both_sides<T: Scalar>(s: &MatchingDataset<T>) -> Result<()> {
    if s.positives().is_empty() {
        return Err(Error::EmptyInput("positive pairs"));
    }
    if s.negatives().is_empty() {
        return Err(Error::EmptyInput("negative pairs"));
    }
    Ok(())
}

fn side_scores<T, F>(f: &F, zs: &[SetPair<T>]) -> Vec<T>
where
    T: Scalar,
    F: ScoreFunction<T> + ?Sized,
{
    zs.iter().map(|z| f.score(z)).collect()
}

/// Empirical matching loss `1/(m+ m-) Σ_i Σ_j phi(f(Z+_i) - f(Z-_j))`.
pub fn empirical_risk<T, F>(
    f: &F,
    s: &MatchingDataset<T>,
    spec: &Surrogate<T>,
) -> Result<RiskEstimate<T>>
where
    T: Scalar,
    F: ScoreFunction<T> + ?Sized,
{
    spec.validate()?;
    require_both_sides(s)?;
    let pos = side_scores(f, s.positives());
    let neg = side_scores(f, s.negatives());
    let kind = match spec {
        Surrogate::Logistic => RiskKind::EmpiricalSurrogate,
        Surrogate::Margin { .. } => RiskKind::EmpiricalMargin,
    };
    Ok(RiskEstimate {
        value: risk_from_scores(&pos, &neg, spec),
        kind,
        positives: pos.len(),
        negatives: neg.len(),
        std_error: None,
    })
}

pub fn empirical_margin_risk<T, F>(f: &F, s: &MatchingDataset<T>, rho: T) -> Result<RiskEstimate<T>>
where
    T: Scalar,
    F: ScoreFunction<T> + ?Sized,
{
    empirical_risk(f, s, &Surrogate::margin(rho)?)
}

/// Empirical 0-1 ranking error over all positive/negative combinations.
pub fn empirical_ranking_error<T, F>(f: &F, s: &MatchingDataset<T>) -> Result<RiskEstimate<T>>
where
    T: Scalar,
    F: ScoreFunction<T> + ?Sized,
{
    require_both_sides(s)?;
    let pos = side_scores(f, s.positives());
    let neg = side_scores(f, s.negatives());
    Ok(RiskEstimate {
        value: ranking_error_from_scores(&pos, &neg),
        kind: RiskKind::EmpiricalRankingError,
        positives: pos.len(),
        negatives: neg.len(),
        std_error: None,
    })
}

/// Scores of `f` on a fresh Monte Carlo draw from `p+` and `p-`.
///
/// Several risks can be read off one draw without re-scoring.
#[derive(Debug, Clone)]
pub struct McSample<T> {
    pub positive_scores: Vec<T>,
    pub negative_scores: Vec<T>,
}

impl<T: Scalar> McSample<T> {
    pub fn draw<F, G, R>(f: &F, gen: &G, n_pos: usize, n_neg: usize, rng: &mut R) -> Result<Self>
    where
        F: ScoreFunction<T> + ?Sized,
        G: PairGenerator<T> + ?Sized,
        R: Rng + ?Sized,
    {
        if n_pos == 0 || n_neg == 0 {
            return Err(invalid("n", "Monte Carlo sample sizes must be at least 1"));
        }
        let pos = gen.sample_positives(n_pos, rng)?;
        let neg = gen.sample_negatives(n_neg, rng)?;
        Ok(Self {
            positive_scores: side_scores(f, &pos),
            negative_scores: side_scores(f, &neg),
        })
    }

    pub fn surrogate_risk(&self, spec: &Surrogate<T>) -> RiskEstimate<T> {
        let (value, se) = grid_mean_with_se(&self.positive_scores, &self.negative_scores, |t| {
            spec.phi(t)
        });
        RiskEstimate {
            value,
            kind: RiskKind::McExpectedSurrogate,
            positives: self.positive_scores.len(),
            negatives: self.negative_scores.len(),
            std_error: Some(se),
        }
    }

    pub fn ranking_error(&self) -> RiskEstimate<T> {
        let (value, se) = grid_mean_with_se(&self.positive_scores, &self.negative_scores, zero_one);
        RiskEstimate {
            value,
            kind: RiskKind::McExpectedRankingError,
            positives: self.positive_scores.len(),
            negatives: self.negative_scores.len(),
            std_error: Some(se),
        }
    }
}

/// Monte Carlo estimate of the expected matching loss `E[phi(f(Z+) - f(Z-))]`
/// from `n_pos` fresh positives and `n_neg` fresh negatives.
pub fn mc_expected_risk<T, F, G, R>(
    f: &F,
    gen: &G,
    n_pos: usize,
    n_neg: usize,
    spec: &Surrogate<T>,
    rng: &mut R,
) -> Result<RiskEstimate<T>>
where
    T: Scalar,
    F: ScoreFunction<T> + ?Sized,
    G: PairGenerator<T> + ?Sized,
    R: Rng + ?Sized,
{
    spec.validate()?;
    Ok(McSample::draw(f, gen, n_pos, n_neg, rng)?.surrogate_risk(spec))
}

/// Monte Carlo estimate of `P[f(Z+) - f(Z-) <= 0]`.
pub fn mc_ranking_error<T, F, G, R>(
    f: &F,
    gen: &G,
    n_pos: usize,
    n_neg: usize,
    rng: &mut R,
) -> Result<RiskEstimate<T>>
where
    T: Scalar,
    F: ScoreFunction<T> + ?Sized,
    G: PairGenerator<T> + ?Sized,
    R: Rng + ?Sized,
{
    Ok(McSample::draw(f, gen, n_pos, n_neg, rng)?.ranking_error())
}
