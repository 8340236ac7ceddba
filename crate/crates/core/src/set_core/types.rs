use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::Scalar;

/// A single item: a finite point in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<T>(Vec<T>);

impl<T: Scalar> FeatureVector<T> {
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyInput("feature vector"));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn squared_distance(&self, other: &Self) -> T {
        squared_distance(&self.0, &other.0)
    }
}

#[inline]
pub(crate) fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// An unordered, non-empty collection of items sharing one dimension.
///
/// Items are stored in a sequence, but nothing exported by this crate depends
/// on that order.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemSet<T> {
    items: Vec<FeatureVector<T>>,
}

impl<T: Scalar> ItemSet<T> {
    pub fn new(items: Vec<FeatureVector<T>>) -> Result<Self> {
        let first = items.first().ok_or(Error::EmptyInput("item set"))?;
        let d = first.dim();
        if let Some(bad) = items.iter().find(|v| v.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.dim(),
            });
        }
        Ok(Self { items })
    }

    /// Builds a set from raw coordinate rows.
    pub fn from_rows<I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<T>>,
    {
        let items = rows
            .into_iter()
            .map(FeatureVector::new)
            .collect::<Result<Vec<_>>>()?;
        Self::new(items)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.items[0].dim()
    }

    pub fn items(&self) -> &[FeatureVector<T>] {
        &self.items
    }

    pub fn iter(&self) -> impl Iterator<Item = &FeatureVector<T>> {
        self.items.iter()
    }

    /// Reorders the items by `p`: item `i` of the result is item `p[i]` of `self`.
    pub fn apply_permutation(&self, p: &Permutation) -> Result<Self> {
        if p.len() != self.len() {
            return Err(Error::InvalidPermutation(format!(
                "permutation of size {} applied to set of size {}",
                p.len(),
                self.len()
            )));
        }
        Ok(Self {
            items: p.apply(&self.items),
        })
    }
}

/// An ordered pair `Z = (X, Y)` of item sets with a shared dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SetPair<T> {
    pub first: ItemSet<T>,
    pub second: ItemSet<T>,
}

impl<T: Scalar> SetPair<T> {
    pub fn new(first: ItemSet<T>, second: ItemSet<T>) -> Result<Self> {
        if first.dim() != second.dim() {
            return Err(Error::DimensionMismatch {
                expected: first.dim(),
                got: second.dim(),
            });
        }
        Ok(Self { first, second })
    }

    pub fn dim(&self) -> usize {
        self.first.dim()
    }

    /// The exchanged pair `(Y, X)`.
    pub fn swapped(&self) -> Self {
        Self {
            first: self.second.clone(),
            second: self.first.clone(),
        }
    }
}

/// A bijection on `{0, .., n-1}` stored as an index sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &i in &mapping {
            if i >= n {
                return Err(Error::InvalidPermutation(format!(
                    "index {i} out of range for size {n}"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidPermutation(format!("index {i} repeated")));
            }
        }
        Ok(Self { mapping })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mapping: (0..n).collect(),
        }
    }

    /// Uniformly random permutation (Fisher-Yates).
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut mapping: Vec<usize> = (0..n).collect();
        mapping.shuffle(rng);
        Self { mapping }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.mapping.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.mapping
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.mapping.len()];
        for (i, &j) in self.mapping.iter().enumerate() {
            inv[j] = i;
        }
        Self { mapping: inv }
    }

    /// `out[i] = xs[self[i]]`. Panics if lengths differ.
    pub fn apply<X: Clone>(&self, xs: &[X]) -> Vec<X> {
        assert_eq!(xs.len(), self.mapping.len(), "permutation length mismatch");
        self.mapping.iter().map(|&j| xs[j].clone()).collect()
    }
}
