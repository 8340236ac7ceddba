//! Rademacher complexities of RKHS balls and the generalization bounds for
//! pairwise matching risk.
//!
//! For the ball `F_r = {f : ‖f‖_K <= r}` the supremum inside the empirical
//! Rademacher complexity has a closed form,
//!
//! ```text
//! sup_{‖f‖ <= r} (1/m) Σ_i σ_i f(Z_i) = (r/m) sqrt(σᵀ G σ),
//! ```
//!
//! attained by `c = r σ / sqrt(σᵀ G σ)`, so only the expectation over `σ`
//! needs Monte Carlo.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::{GramMatrix, PairKernel};
use crate::sampling::MatchingDataset;
use crate::set_core::SetPair;
use crate::Scalar;

/// Which sample a complexity estimate was computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplexityKind {
    Joint,
    /// Positive pairs `Z+` (first component of each ranking pair).
    Marginal1,
    /// Negative pairs `Z-` (second component of each ranking pair).
    Marginal2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RademacherEstimate<T> {
    pub value: T,
    pub n_sigma: usize,
    pub std_error: T,
    pub which: ComplexityKind,
}

/// `(r/m) sqrt(σᵀ G σ)` for one sign vector.
pub fn rkhs_sup_correlation<T: Scalar>(gram: &GramMatrix<T>, sigma: &[T], r: T) -> T {
    let m = T::from_usize_lossy(gram.size());
    r / m * gram.quad_form(sigma).max(T::zero()).sqrt()
}

/// Coefficients of the ball element attaining the supremum for `sigma`.
pub fn sup_attaining_coefficients<T: Scalar>(gram: &GramMatrix<T>, sigma: &[T], r: T) -> Vec<T> {
    let q = gram.quad_form(sigma).max(T::zero()).sqrt();
    if q == T::zero() {
        return vec![T::zero(); sigma.len()];
    }
    sigma.iter().map(|&s| r * s / q).collect()
}

fn check_radius<T: Scalar>(r: T) -> Result<()> {
    if !(r > T::zero()) || !r.is_finite() {
        return Err(invalid("r", format!("must be positive, got {r}")));
    }
    Ok(())
}

/// Monte Carlo estimate of the empirical Rademacher complexity of `F_r` on
/// the sample whose Gram matrix is `gram`.
pub fn rademacher_from_gram<T: Scalar, R: Rng + ?Sized>(
    gram: &GramMatrix<T>,
    r: T,
    n_sigma: usize,
    which: ComplexityKind,
    rng: &mut R,
) -> Result<RademacherEstimate<T>> {
    check_radius(r)?;
    if n_sigma == 0 {
        return Err(invalid("n_sigma", "need at least one sign draw"));
    }
    let m = gram.size();
    let mut sigma = vec![T::zero(); m];
    // Welford updates: a constant draw sequence gives exactly zero variance.
    let mut mean = T::zero();
    let mut m2 = T::zero();
    for k in 1..=n_sigma {
        for s in &mut sigma {
            *s = if rng.random::<bool>() {
                T::one()
            } else {
                -T::one()
            };
        }
        let v = rkhs_sup_correlation(gram, &sigma, r);
        let d = v - mean;
        mean += d / T::from_usize_lossy(k);
        m2 += d * (v - mean);
    }
    let n = T::from_usize_lossy(n_sigma);
    let std_error = if n_sigma > 1 {
        (m2.max(T::zero()) / (n - T::one()) / n).sqrt()
    } else {
        T::zero()
    };
    Ok(RademacherEstimate {
        value: mean,
        n_sigma,
        std_error,
        which,
    })
}

pub fn empirical_rademacher_rkhs<T: Scalar, R: Rng + ?Sized>(
    anchors: &[SetPair<T>],
    pk: &PairKernel<T>,
    r: T,
    n_sigma: usize,
    rng: &mut R,
) -> Result<RademacherEstimate<T>> {
    let anchors: Arc<[SetPair<T>]> = anchors.to_vec().into();
    let gram = GramMatrix::new(anchors, pk)?;
    rademacher_from_gram(&gram, r, n_sigma, ComplexityKind::Joint, rng)
}

/// Exact expectation over all `2^m` sign vectors. Limited to `m <= 24`.
pub fn exact_rademacher_rkhs<T: Scalar>(gram: &GramMatrix<T>, r: T) -> Result<T> {
    check_radius(r)?;
    let m = gram.size();
    if m > 24 {
        return Err(invalid(
            "m",
            format!("exact enumeration needs m <= 24, got {m}"),
        ));
    }
    let patterns = 1usize << m;
    let mut sigma = vec![T::zero(); m];
    let mut total = T::zero();
    for bits in 0..patterns {
        for (k, s) in sigma.iter_mut().enumerate() {
            *s = if bits >> k & 1 == 1 {
                T::one()
            } else {
                -T::one()
            };
        }
        total += rkhs_sup_correlation(gram, &sigma, r);
    }
    Ok(total / T::from_usize_lossy(patterns))
}

/// Side of a matching dataset whose complexity is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Positives,
    Negatives,
}

/// Complexity on one side of the ranking pairs: `S^1` are the positive pairs,
/// `S^2` the negative pairs.
pub fn marginal_rademacher<T: Scalar, R: Rng + ?Sized>(
    s: &MatchingDataset<T>,
    which: Side,
    pk: &PairKernel<T>,
    r: T,
    n_sigma: usize,
    rng: &mut R,
) -> Result<RademacherEstimate<T>> {
    let (pairs, kind) = match which {
        Side::Positives => (s.positives(), ComplexityKind::Marginal1),
        Side::Negatives => (s.negatives(), ComplexityKind::Marginal2),
    };
    if pairs.is_empty() {
        return Err(Error::EmptyInput("selected side"));
    }
    let gram = GramMatrix::new(pairs.to_vec().into(), pk)?;
    rademacher_from_gram(&gram, r, n_sigma, kind, rng)
}

/// Expected-complexity form (`log(1/δ)`) or fully empirical form (`3 log(2/δ)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundVariant {
    Expected,
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSource {
    Lemma1A,
    Lemma1B,
    Thm1Expected,
    Thm1Empirical,
    Thm2Tail,
    Remark2Deviation,
}

/// How the components of a report combine into its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combination {
    Sum,
    Product,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundComponent<T> {
    pub name: String,
    pub value: T,
}

/// Parameters a bound was evaluated at; absent entries did not enter it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs<T> {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_pos: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_neg: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<T>,
}

impl<T> Default for BoundInputs<T> {
    fn default() -> Self {
        Self {
            lipschitz: None,
            kappa: None,
            r: None,
            rho: None,
            delta: None,
            epsilon: None,
            m: None,
            m_pos: None,
            m_neg: None,
            alpha: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport<T> {
    pub source: BoundSource,
    pub bound_value: T,
    pub combination: Combination,
    pub components: Vec<BoundComponent<T>>,
    pub inputs: BoundInputs<T>,
}

impl<T: Scalar> BoundReport<T> {
    fn assemble(
        source: BoundSource,
        combination: Combination,
        components: Vec<(&str, T)>,
        inputs: BoundInputs<T>,
    ) -> Self {
        let components: Vec<BoundComponent<T>> = components
            .into_iter()
            .map(|(name, value)| BoundComponent {
                name: name.to_owned(),
                value,
            })
            .collect();
        let mut report = Self {
            source,
            bound_value: T::zero(),
            combination,
            components,
            inputs,
        };
        report.bound_value = report.reassemble();
        report
    }

    /// Recombines the recorded components.
    pub fn reassemble(&self) -> T {
        let values = self.components.iter().map(|c| c.value);
        match self.combination {
            Combination::Sum => values.fold(T::zero(), |a, b| a + b),
            Combination::Product => values.fold(T::one(), |a, b| a * b),
        }
    }

    pub fn component(&self, name: &str) -> Option<T> {
        self.components
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.value)
    }

    /// Flat `key -> value` view: `bound_value`, `component.<name>`, `input.<name>`.
    pub fn to_flat_record(&self) -> Vec<(String, f64)> {
        let mut out = vec![("bound_value".to_owned(), self.bound_value.to_f64_lossy())];
        for c in &self.components {
            out.push((format!("component.{}", c.name), c.value.to_f64_lossy()));
        }
        let i = &self.inputs;
        let reals = [
            ("lipschitz", i.lipschitz),
            ("kappa", i.kappa),
            ("r", i.r),
            ("rho", i.rho),
            ("delta", i.delta),
            ("epsilon", i.epsilon),
            ("alpha", i.alpha),
        ];
        for (k, v) in reals {
            if let Some(v) = v {
                out.push((format!("input.{k}"), v.to_f64_lossy()));
            }
        }
        for (k, v) in [("m", i.m), ("m_pos", i.m_pos), ("m_neg", i.m_neg)] {
            if let Some(v) = v {
                out.push((format!("input.{k}"), v as f64));
            }
        }
        out
    }
}

fn check_delta<T: Scalar>(delta: T) -> Result<()> {
    if !(delta > T::zero() && delta < T::one()) {
        return Err(invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

fn check_alpha<T: Scalar>(alpha: T) -> Result<()> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(invalid("m", "sample size must be at least 1"));
    }
    Ok(())
}

fn check_positive<T: Scalar>(name: &'static str, v: T) -> Result<()> {
    if !(v > T::zero()) || !v.is_finite() {
        return Err(invalid(
            name,
            format!("must be positive and finite, got {v}"),
        ));
    }
    Ok(())
}

fn check_nonneg<T: Scalar>(name: &'static str, v: T) -> Result<()> {
    if !(v >= T::zero()) || !v.is_finite() {
        return Err(invalid(
            name,
            format!("must be non-negative and finite, got {v}"),
        ));
    }
    Ok(())
}

fn check_unit<T: Scalar>(name: &'static str, v: T) -> Result<()> {
    if !(v >= T::zero() && v <= T::one()) {
        return Err(invalid(name, format!("must lie in [0, 1], got {v}")));
    }
    Ok(())
}

/// Confidence term of the uniform deviation bounds.
fn confidence_term<T: Scalar>(m: usize, delta: T, variant: BoundVariant) -> T {
    let two_m = T::lit(2.0) * T::from_usize_lossy(m);
    match variant {
        BoundVariant::Expected => (delta.recip().ln() / two_m).sqrt(),
        BoundVariant::Empirical => T::lit(3.0) * ((T::lit(2.0) / delta).ln() / two_m).sqrt(),
    }
}

/// Uniform bound for a `[0, 1]`-valued class:
/// `mean + 2 complexity + sqrt(log(1/δ)/(2m))` (expected) or
/// `mean + 2 complexity + 3 sqrt(log(2/δ)/(2m))` (empirical).
///
/// The expected form keeps `log(1/δ)` as in the stated result, even though a
/// union-bound argument over two events would suggest `δ/2`.
pub fn lemma1_report<T: Scalar>(
    empirical_mean: T,
    complexity: T,
    m: usize,
    delta: T,
    variant: BoundVariant,
) -> Result<BoundReport<T>> {
    check_unit("empirical_mean", empirical_mean)?;
    check_nonneg("complexity", complexity)?;
    check_delta(delta)?;
    check_m(m)?;
    let source = match variant {
        BoundVariant::Expected => BoundSource::Lemma1A,
        BoundVariant::Empirical => BoundSource::Lemma1B,
    };
    Ok(BoundReport::assemble(
        source,
        Combination::Sum,
        vec![
            ("empirical_mean", empirical_mean),
            ("complexity", T::lit(2.0) * complexity),
            ("confidence", confidence_term(m, delta, variant)),
        ],
        BoundInputs {
            delta: Some(delta),
            m: Some(m),
            ..Default::default()
        },
    ))
}

pub fn lemma1_bound<T: Scalar>(
    empirical_mean: T,
    complexity: T,
    m: usize,
    delta: T,
    variant: BoundVariant,
) -> Result<T> {
    Ok(lemma1_report(empirical_mean, complexity, m, delta, variant)?.bound_value)
}

/// Margin bound on the ranking error:
/// `R(f) <= R̂_rho(f) + (2/rho)(R1 + R2) + confidence`.
pub fn margin_bound<T: Scalar>(
    empirical_margin_risk: T,
    rad1: T,
    rad2: T,
    rho: T,
    m: usize,
    delta: T,
    variant: BoundVariant,
) -> Result<BoundReport<T>> {
    check_unit("empirical_margin_risk", empirical_margin_risk)?;
    check_nonneg("rad1", rad1)?;
    check_nonneg("rad2", rad2)?;
    check_positive("rho", rho)?;
    check_delta(delta)?;
    check_m(m)?;
    let source = match variant {
        BoundVariant::Expected => BoundSource::Thm1Expected,
        BoundVariant::Empirical => BoundSource::Thm1Empirical,
    };
    Ok(BoundReport::assemble(
        source,
        Combination::Sum,
        vec![
            ("empirical_margin_risk", empirical_margin_risk),
            ("complexity", T::lit(2.0) / rho * (rad1 + rad2)),
            ("confidence", confidence_term(m, delta, variant)),
        ],
        BoundInputs {
            rho: Some(rho),
            delta: Some(delta),
            m: Some(m),
            ..Default::default()
        },
    ))
}

fn check_rkhs_constants<T: Scalar>(l: T, kappa: T, r: T) -> Result<()> {
    check_positive("lipschitz", l)?;
    check_positive("kappa", kappa)?;
    check_positive("r", r)
}

/// Tail bound `P[|R̂(f; S_alpha) - R(f)| >= eps] <= 2 exp(-alpha²(1-alpha)² m eps² / (2 L² kappa² r²))`.
///
/// The exponent is negative: the bound follows from McDiarmid's inequality
/// and decays in `eps`. With a positive exponent the right-hand side would
/// exceed 2 for every `eps > 0`. Values `>= 1` are vacuous; see [`is_vacuous`].
pub fn rkhs_tail_probability<T: Scalar>(
    epsilon: T,
    m: usize,
    alpha: T,
    l: T,
    kappa: T,
    r: T,
) -> Result<T> {
    check_nonneg("epsilon", epsilon)?;
    check_m(m)?;
    check_alpha(alpha)?;
    check_rkhs_constants(l, kappa, r)?;
    let a = alpha * (T::one() - alpha);
    let num = a * a * T::from_usize_lossy(m) * epsilon * epsilon;
    let den = T::lit(2.0) * l * l * kappa * kappa * r * r;
    Ok(T::lit(2.0) * (-num / den).exp())
}

/// A probability bound at or above 1 carries no information.
pub fn is_vacuous<T: Scalar>(probability: T) -> bool {
    probability >= T::one()
}

pub fn rkhs_tail_report<T: Scalar>(
    epsilon: T,
    m: usize,
    alpha: T,
    l: T,
    kappa: T,
    r: T,
) -> Result<BoundReport<T>> {
    let p = rkhs_tail_probability(epsilon, m, alpha, l, kappa, r)?;
    Ok(BoundReport::assemble(
        BoundSource::Thm2Tail,
        Combination::Product,
        vec![
            ("multiplier", T::lit(2.0)),
            ("exponential", p / T::lit(2.0)),
        ],
        BoundInputs {
            lipschitz: Some(l),
            kappa: Some(kappa),
            r: Some(r),
            epsilon: Some(epsilon),
            m: Some(m),
            alpha: Some(alpha),
            ..Default::default()
        },
    ))
}

/// `eps(δ) = (L kappa r / (alpha (1 - alpha))) sqrt(2 log(2/δ) / m)` at real-valued `m`.
fn deviation_value<T: Scalar>(m: T, alpha: T, delta: T, l: T, kappa: T, r: T) -> (T, T) {
    let scale = l * kappa * r / (alpha * (T::one() - alpha));
    let conf = (T::lit(2.0) * (T::lit(2.0) / delta).ln() / m).sqrt();
    (scale, conf)
}

/// With probability at least `1 - δ`, `|R̂(f; S_alpha) - R(f)| <= eps(δ)`.
/// Components: `scale = L kappa r / (alpha (1 - alpha))` and
/// `confidence = sqrt(2 log(2/δ) / m)`, combined as a product.
pub fn rkhs_deviation_bound<T: Scalar>(
    m: usize,
    alpha: T,
    delta: T,
    l: T,
    kappa: T,
    r: T,
) -> Result<BoundReport<T>> {
    check_m(m)?;
    check_alpha(alpha)?;
    check_delta(delta)?;
    check_rkhs_constants(l, kappa, r)?;
    let (scale, conf) = deviation_value(T::from_usize_lossy(m), alpha, delta, l, kappa, r);
    Ok(BoundReport::assemble(
        BoundSource::Remark2Deviation,
        Combination::Product,
        vec![("scale", scale), ("confidence", conf)],
        BoundInputs {
            lipschitz: Some(l),
            kappa: Some(kappa),
            r: Some(r),
            delta: Some(delta),
            m: Some(m),
            alpha: Some(alpha),
            ..Default::default()
        },
    ))
}

/// Grid `{0.01, 0.02, .., 0.99}`.
fn percent_grid<T: Scalar>() -> impl Iterator<Item = T> {
    (1..100).map(|k| T::from_usize_lossy(k) / T::lit(100.0))
}

fn grid_argmin<T: Scalar>(grid: impl Iterator<Item = T>, objective: impl Fn(T) -> T) -> (T, T) {
    let mut best = (T::nan(), T::infinity());
    for a in grid {
        let v = objective(a);
        if v < best.1 {
            best = (a, v);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalAlpha<T> {
    /// Maximiser of `alpha (1 - alpha)`: exactly 1/2.
    pub analytic: T,
    /// Grid argmin of the deviation bound over `{0.01, .., 0.99}`.
    pub grid: T,
    pub bound_at_grid: T,
}

/// Positive ratio minimising the deviation bound at a fixed total size `m`.
pub fn optimal_alpha<T: Scalar>(
    m: usize,
    l: T,
    kappa: T,
    r: T,
    delta: T,
) -> Result<OptimalAlpha<T>> {
    check_m(m)?;
    check_delta(delta)?;
    check_rkhs_constants(l, kappa, r)?;
    let mt = T::from_usize_lossy(m);
    let (grid, bound_at_grid) = grid_argmin(percent_grid(), |a| {
        let (s, c) = deviation_value(mt, a, delta, l, kappa, r);
        s * c
    });
    Ok(OptimalAlpha {
        analytic: T::lit(0.5),
        grid,
        bound_at_grid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalNegativeRatio<T> {
    /// `1 - alpha* = 2/3`.
    pub negative_fraction: T,
    /// `alpha* = 1/3`, the stationary point of `sqrt(alpha) (1 - alpha)`.
    pub alpha: T,
    /// Grid argmin over `{0.01, .., 0.99}` of the bound at `m = m+ / alpha`.
    pub grid_alpha: T,
    pub grid_negative_fraction: T,
    /// `m- = m+ (1 - alpha*) / alpha* = 2 m+`.
    pub recommended_negatives: usize,
}

/// With `m+` fixed and `m = m+ / alpha`, the deviation bound is proportional
/// to `1 / (sqrt(alpha) (1 - alpha))`, minimised at `alpha = 1/3`.
pub fn optimal_negative_ratio<T: Scalar>(
    m_pos: usize,
    l: T,
    kappa: T,
    r: T,
    delta: T,
) -> Result<OptimalNegativeRatio<T>> {
    check_m(m_pos)?;
    check_delta(delta)?;
    check_rkhs_constants(l, kappa, r)?;
    let mp = T::from_usize_lossy(m_pos);
    let (grid_alpha, _) = grid_argmin(percent_grid(), |a| {
        let (s, c) = deviation_value(mp / a, a, delta, l, kappa, r);
        s * c
    });
    let third = T::one() / T::lit(3.0);
    Ok(OptimalNegativeRatio {
        negative_fraction: T::one() - third,
        alpha: third,
        grid_alpha,
        grid_negative_fraction: T::one() - grid_alpha,
        recommended_negatives: 2 * m_pos,
    })
}
