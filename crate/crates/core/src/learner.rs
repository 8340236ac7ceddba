//! Empirical risk minimisation over the RKHS ball by projected gradient
//! descent on kernel-expansion coefficients.
//!
//! The anchors are the training pairs themselves (positives first), so the
//! score vector on the training sample is `G c` and the gradient of the
//! pairwise empirical risk with respect to `c` is `G w` with
//!
//! ```text
//! w_i =  1/(m+ m-) Σ_j phi'(t_ij)   for positive anchors i
//! w_j = -1/(m+ m-) Σ_i phi'(t_ij)   for negative anchors j
//! t_ij = (G c)_i - (G c)_j
//! ```

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::{project_to_ball, rkhs_norm, GramMatrix, PairKernel, RkhsScoreFunction};
use crate::losses::{empirical_risk, McSample, RiskEstimate, Surrogate};
use crate::sampling::{MatchingDataset, PairGenerator};
use crate::set_core::SetPair;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig<T> {
    /// Radius of the RKHS ball the model is kept in.
    pub r: T,
    pub steps: usize,
    pub step_size: T,
    pub surrogate: Surrogate<T>,
}

impl<T: Scalar> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            r: T::one(),
            steps: 200,
            step_size: T::lit(0.05),
            surrogate: Surrogate::Logistic,
        }
    }
}

impl<T: Scalar> TrainConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.r > T::zero()) || !self.r.is_finite() {
            return Err(invalid("r", format!("must be positive, got {}", self.r)));
        }
        if !(self.step_size > T::zero()) || !self.step_size.is_finite() {
            return Err(invalid(
                "step_size",
                format!("must be positive, got {}", self.step_size),
            ));
        }
        self.surrogate.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace<T> {
    /// Empirical risk at initialisation followed by one value per step.
    pub risks: Vec<T>,
    /// `‖f‖_K` aligned with `risks`.
    pub norms: Vec<T>,
    pub final_norm: T,
    pub anchors: usize,
}

/// Pairwise empirical risk as a function of the coefficient vector.
#[derive(Debug, Clone)]
pub struct ErmObjective<'g, T> {
    gram: &'g GramMatrix<T>,
    m_pos: usize,
    m_neg: usize,
    surrogate: Surrogate<T>,
}

impl<'g, T: Scalar> ErmObjective<'g, T> {
    /// `gram` is over positives followed by negatives.
    pub fn new(
        gram: &'g GramMatrix<T>,
        m_pos: usize,
        m_neg: usize,
        surrogate: Surrogate<T>,
    ) -> Result<Self> {
        surrogate.validate()?;
        if m_pos == 0 || m_neg == 0 {
            return Err(Error::EmptyInput("training side"));
        }
        if gram.size() != m_pos + m_neg {
            return Err(invalid(
                "gram",
                format!(
                    "size {} does not match {} + {} anchors",
                    gram.size(),
                    m_pos,
                    m_neg
                ),
            ));
        }
        Ok(Self {
            gram,
            m_pos,
            m_neg,
            surrogate,
        })
    }

    fn norm_factor(&self) -> T {
        T::from_usize_lossy(self.m_pos * self.m_neg).recip()
    }

    pub fn value(&self, c: &[T]) -> T {
        let s = self.gram.matvec(c);
        self.value_from_scores(&s)
    }

    fn value_from_scores(&self, s: &[T]) -> T {
        let (pos, neg) = s.split_at(self.m_pos);
        crate::losses::risk_from_scores(pos, neg, &self.surrogate)
    }

    /// Returns `(R̂(c), ∇R̂(c))`.
    pub fn value_and_gradient(&self, c: &[T]) -> (T, Vec<T>) {
        let s = self.gram.matvec(c);
        let (pos, neg) = s.split_at(self.m_pos);
        let mut w = vec![T::zero(); self.m_pos + self.m_neg];
        let mut total = T::zero();
        for (i, &p) in pos.iter().enumerate() {
            for (j, &n) in neg.iter().enumerate() {
                let t = p - n;
                total += self.surrogate.phi(t);
                let d = self.surrogate.derivative(t);
                w[i] += d;
                w[self.m_pos + j] -= d;
            }
        }
        let k = self.norm_factor();
        for wi in &mut w {
            *wi *= k;
        }
        (total * k, self.gram.matvec(&w))
    }

    pub fn gradient(&self, c: &[T]) -> Vec<T> {
        self.value_and_gradient(c).1
    }
}

/// Projected gradient descent from `c = 0` on the pairwise empirical risk,
/// keeping `‖f‖_K <= r` after every step.
pub fn train<T: Scalar>(
    s: &MatchingDataset<T>,
    pk: &PairKernel<T>,
    cfg: &TrainConfig<T>,
) -> Result<(RkhsScoreFunction<T>, TrainTrace<T>)> {
    cfg.validate()?;
    let anchors: Arc<[SetPair<T>]> = s.all_pairs().into();
    let gram = GramMatrix::new(anchors, pk)?;
    train_with_gram(&gram, s.m_pos(), s.m_neg(), pk, cfg)
}

/// As [`train`], reusing a Gram matrix over positives followed by negatives.
pub fn train_with_gram<T: Scalar>(
    gram: &GramMatrix<T>,
    m_pos: usize,
    m_neg: usize,
    pk: &PairKernel<T>,
    cfg: &TrainConfig<T>,
) -> Result<(RkhsScoreFunction<T>, TrainTrace<T>)> {
    cfg.validate()?;
    let objective = ErmObjective::new(gram, m_pos, m_neg, cfg.surrogate)?;
    let mut f = RkhsScoreFunction::zero(Arc::clone(gram.anchors()), *pk)?;
    let mut risks = Vec::with_capacity(cfg.steps + 1);
    let mut norms = Vec::with_capacity(cfg.steps + 1);
    let (mut risk, mut grad) = objective.value_and_gradient(f.coefficients());
    risks.push(risk);
    norms.push(T::zero());

    for step in 1..=cfg.steps {
        if let Some(k) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient {
                step,
                detail: format!("component {k} is {}", grad[k]),
            });
        }
        let c: Vec<T> = f
            .coefficients()
            .iter()
            .zip(&grad)
            .map(|(&c, &g)| c - cfg.step_size * g)
            .collect();
        f = project_to_ball(&f.with_coefficients(c)?, gram, cfg.r)?;
        let prev = risk;
        (risk, grad) = objective.value_and_gradient(f.coefficients());
        if step <= 10 && risk > prev {
            log::warn!("empirical risk rose at step {step}: {prev} -> {risk}");
        }
        risks.push(risk);
        norms.push(rkhs_norm(&f, gram)?);
    }

    let final_norm = rkhs_norm(&f, gram)?;
    let trace = TrainTrace {
        risks,
        norms,
        final_norm,
        anchors: gram.size(),
    };
    Ok((f, trace))
}

/// A random element of the ball with `‖f‖_K = r` exactly (up to rounding):
/// Gaussian coefficients rescaled radially. Returns the zero function if the
/// Gram matrix annihilates the draw.
pub fn random_in_ball<T: Scalar, R: Rng + ?Sized>(
    gram: &GramMatrix<T>,
    pk: &PairKernel<T>,
    r: T,
    rng: &mut R,
) -> Result<RkhsScoreFunction<T>> {
    if !(r > T::zero()) {
        return Err(invalid("r", format!("must be positive, got {r}")));
    }
    let c: Vec<T> = (0..gram.size())
        .map(|_| T::lit(StandardNormal.sample(rng)))
        .collect();
    let norm = gram.quad_form(&c).max(T::zero()).sqrt();
    let scale = if norm > T::zero() {
        r / norm
    } else {
        T::zero()
    };
    RkhsScoreFunction::new(
        c.into_iter().map(|x| x * scale).collect(),
        Arc::clone(gram.anchors()),
        *pk,
    )
}

/// Risk summary of a score function on a held-out sample and on fresh draws.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelReport<T> {
    pub empirical_surrogate: RiskEstimate<T>,
    pub empirical_margin: RiskEstimate<T>,
    pub mc_ranking_error: RiskEstimate<T>,
    pub mc_surrogate: RiskEstimate<T>,
    pub norm: T,
}

#[allow(clippy::too_many_arguments)]
pub fn evaluate_model<T, G, R>(
    f: &RkhsScoreFunction<T>,
    s_test: &MatchingDataset<T>,
    gen: &G,
    surrogate: &Surrogate<T>,
    rho: T,
    n_mc: usize,
    rng: &mut R,
) -> Result<ModelReport<T>>
where
    T: Scalar,
    G: PairGenerator<T>,
    R: Rng + ?Sized,
{
    let empirical_surrogate = empirical_risk(f, s_test, surrogate)?;
    let empirical_margin = empirical_risk(f, s_test, &Surrogate::margin(rho)?)?;
    let mc = McSample::draw(f, gen, n_mc, n_mc, rng)?;
    Ok(ModelReport {
        empirical_surrogate,
        empirical_margin,
        mc_ranking_error: mc.ranking_error(),
        mc_surrogate: mc.surrogate_risk(surrogate),
        norm: f.norm(),
    })
}
