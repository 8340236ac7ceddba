//! Synthetic matched-pair generator and the negative-sampling protocol.
//!
//! Positives come from a cluster model: each pair picks one of a fixed set of
//! cluster centres and both of its sets scatter around that centre. Negatives
//! recombine the first set of one positive with the second set of a different
//! positive, so `p-` is the product of the positive marginals restricted to
//! distinct source pairs.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::set_core::{FeatureVector, ItemSet, SetPair};
use crate::Scalar;

/// Parameters of the synthetic positive-pair distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    pub dim: usize,
    pub n_clusters: usize,
    pub cluster_std: f64,
    pub within_pair_std: f64,
    pub set_size_min: usize,
    pub set_size_max: usize,
    /// Seeds the cluster centres and the stream used by [`generate_positives`].
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            dim: 2,
            n_clusters: 8,
            cluster_std: 3.0,
            within_pair_std: 0.5,
            set_size_min: 2,
            set_size_max: 5,
            seed: 0,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid("dim", "must be at least 1"));
        }
        if self.n_clusters < 2 {
            return Err(invalid(
                "n_clusters",
                format!("must be at least 2, got {}", self.n_clusters),
            ));
        }
        if !(self.cluster_std > 0.0) || !self.cluster_std.is_finite() {
            return Err(invalid(
                "cluster_std",
                format!("must be positive, got {}", self.cluster_std),
            ));
        }
        if !(self.within_pair_std > 0.0) || !self.within_pair_std.is_finite() {
            return Err(invalid(
                "within_pair_std",
                format!("must be positive, got {}", self.within_pair_std),
            ));
        }
        if self.set_size_min < 1 || self.set_size_max < self.set_size_min {
            return Err(invalid(
                "set_size",
                format!(
                    "need 1 <= min <= max, got [{}, {}]",
                    self.set_size_min, self.set_size_max
                ),
            ));
        }
        Ok(())
    }
}

/// SplitMix64 finaliser over `master + (index + 1) * golden gamma`.
///
/// Used to split one master seed into independent per-trial or per-purpose seeds.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// RNG used for all seeded streams in the library.
pub type SeedRng = rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeedRng {
    SeedRng::seed_from_u64(seed)
}

/// Source of fresh positive and negative pairs.
pub trait PairGenerator<T: Scalar> {
    fn sample_positives<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<SetPair<T>>>;

    /// Fresh draws from `p-`: recombinations of an independent pool of fresh positives.
    fn sample_negatives<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<SetPair<T>>> {
        let pool = self.sample_positives(n.max(2), rng)?;
        negative_sampling(&pool, n, rng)
    }
}

/// Cluster-model generator with fixed centres.
#[derive(Debug, Clone)]
pub struct SyntheticGenerator<T> {
    spec: GeneratorSpec,
    centres: Vec<Vec<T>>,
}

const CENTRE_STREAM: u64 = 0;
const POSITIVE_STREAM: u64 = 1;

impl<T: Scalar> SyntheticGenerator<T> {
    pub fn new(spec: GeneratorSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = seeded_rng(derive_seed(spec.seed, CENTRE_STREAM));
        let centres = (0..spec.n_clusters)
            .map(|_| {
                (0..spec.dim)
                    .map(|_| T::lit(spec.cluster_std * gauss(&mut rng)))
                    .collect()
            })
            .collect();
        Ok(Self { spec, centres })
    }

    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    pub fn centres(&self) -> &[Vec<T>] {
        &self.centres
    }

    fn sample_set<R: Rng + ?Sized>(&self, centre: &[T], rng: &mut R) -> ItemSet<T> {
        let n = rng.random_range(self.spec.set_size_min..=self.spec.set_size_max);
        let sd = self.spec.within_pair_std;
        let items = (0..n)
            .map(|_| {
                let coords = centre
                    .iter()
                    .map(|&c| c + T::lit(sd * gauss(rng)))
                    .collect();
                FeatureVector::new(coords).expect("finite generator output")
            })
            .collect();
        ItemSet::new(items).expect("non-empty set of one dimension")
    }

    pub fn sample_positive<R: Rng + ?Sized>(&self, rng: &mut R) -> SetPair<T> {
        let k = rng.random_range(0..self.centres.len());
        let centre = &self.centres[k];
        let x = self.sample_set(centre, rng);
        let y = self.sample_set(centre, rng);
        SetPair {
            first: x,
            second: y,
        }
    }
}

impl<T: Scalar> PairGenerator<T> for SyntheticGenerator<T> {
    fn sample_positives<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<SetPair<T>>> {
        Ok((0..n).map(|_| self.sample_positive(rng)).collect())
    }
}

fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// `m_pos` positive pairs drawn from the generator's own seeded stream.
pub fn generate_positives<T: Scalar>(
    spec: &GeneratorSpec,
    m_pos: usize,
) -> Result<Vec<SetPair<T>>> {
    if m_pos == 0 {
        return Err(invalid("m_pos", "need at least one positive pair"));
    }
    let gen = SyntheticGenerator::new(spec.clone())?;
    let mut rng = seeded_rng(derive_seed(spec.seed, POSITIVE_STREAM));
    gen.sample_positives(m_pos, &mut rng)
}

/// Source indices `(i, j)`, `i != j`, of `count` recombined negatives, drawn
/// uniformly with replacement from a pool of `pool` positives.
pub fn recombination_indices<R: Rng + ?Sized>(
    pool: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    if pool < 2 {
        return Err(Error::CannotRecombine(pool));
    }
    Ok((0..count)
        .map(|_| {
            let i = rng.random_range(0..pool);
            let mut j = rng.random_range(0..pool - 1);
            if j >= i {
                j += 1;
            }
            (i, j)
        })
        .collect())
}

/// Negatives `(X_i, Y_j)` with `i != j` recombined from the positives.
pub fn negative_sampling<T: Scalar, R: Rng + ?Sized>(
    positives: &[SetPair<T>],
    m_neg: usize,
    rng: &mut R,
) -> Result<Vec<SetPair<T>>> {
    if m_neg == 0 {
        return Err(invalid("m_neg", "need at least one negative pair"));
    }
    Ok(recombination_indices(positives.len(), m_neg, rng)?
        .into_iter()
        .map(|(i, j)| SetPair {
            first: positives[i].first.clone(),
            second: positives[j].second.clone(),
        })
        .collect())
}

/// Training sample `S = (S+, S-)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingDataset<T> {
    positives: Vec<SetPair<T>>,
    negatives: Vec<SetPair<T>>,
}

impl<T: Scalar> MatchingDataset<T> {
    pub fn new(positives: Vec<SetPair<T>>, negatives: Vec<SetPair<T>>) -> Result<Self> {
        let d = positives
            .first()
            .ok_or(Error::EmptyInput("positive pairs"))?
            .dim();
        if let Some(bad) = positives.iter().chain(&negatives).find(|z| z.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.dim(),
            });
        }
        Ok(Self {
            positives,
            negatives,
        })
    }

    pub fn positives(&self) -> &[SetPair<T>] {
        &self.positives
    }

    pub fn negatives(&self) -> &[SetPair<T>] {
        &self.negatives
    }

    pub fn m_pos(&self) -> usize {
        self.positives.len()
    }

    pub fn m_neg(&self) -> usize {
        self.negatives.len()
    }

    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.positives[0].dim()
    }

    /// Positive ratio `alpha = m+ / m`.
    pub fn alpha(&self) -> f64 {
        self.m_pos() as f64 / self.len() as f64
    }

    /// All pairs, positives first then negatives.
    pub fn all_pairs(&self) -> Vec<SetPair<T>> {
        self.positives
            .iter()
            .chain(&self.negatives)
            .cloned()
            .collect()
    }

    /// Every item of every set, in storage order.
    pub fn items(&self) -> impl Iterator<Item = &FeatureVector<T>> {
        self.positives
            .iter()
            .chain(&self.negatives)
            .flat_map(|z| z.first.iter().chain(z.second.iter()))
    }

    /// The first `min(m+, m-)` positives zipped with the first `min(m+, m-)` negatives.
    pub fn ranking_pairs(&self) -> Vec<(&SetPair<T>, &SetPair<T>)> {
        self.positives.iter().zip(&self.negatives).collect()
    }
}

pub fn assemble<T: Scalar>(
    positives: Vec<SetPair<T>>,
    negatives: Vec<SetPair<T>>,
) -> Result<MatchingDataset<T>> {
    MatchingDataset::new(positives, negatives)
}

/// `(m+, m-)` with `m+ = round_half_even(alpha m)`, rejecting empty sides.
pub fn split_counts(m: usize, alpha: f64) -> Result<(usize, usize)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    let m_pos = (alpha * m as f64).round_ties_even() as usize;
    let m_pos = m_pos.min(m);
    let m_neg = m - m_pos;
    if m_pos == 0 || m_neg == 0 {
        return Err(Error::DegenerateRatio {
            m,
            alpha,
            positives: m_pos,
            negatives: m_neg,
        });
    }
    Ok((m_pos, m_neg))
}

/// Draws `S_alpha`: `round(alpha m)` fresh positives, and the remaining
/// `m - m+` negatives recombined from them.
pub fn assemble_with_ratio<T, G, R>(
    gen: &G,
    m: usize,
    alpha: f64,
    rng: &mut R,
) -> Result<MatchingDataset<T>>
where
    T: Scalar,
    G: PairGenerator<T> + ?Sized,
    R: Rng + ?Sized,
{
    let (m_pos, m_neg) = split_counts(m, alpha)?;
    let positives = gen.sample_positives(m_pos, rng)?;
    let negatives = negative_sampling(&positives, m_neg, rng)?;
    MatchingDataset::new(positives, negatives)
}
