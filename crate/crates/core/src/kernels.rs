//! Kernels on items, sets and set pairs, Gram matrices, and score functions
//! living in a norm ball of the induced RKHS.
//!
//! The kernel on set pairs is the exchange-symmetrised product of
//! mean-embedding set kernels:
//!
//! ```text
//! k_set(A, B)          = 1/(|A||B|) Σ_i Σ_j k(a_i, b_j)
//! K((X, Y), (X', Y'))  = k_set(X, X') k_set(Y, Y') + k_set(X, Y') k_set(Y, X')
//! ```
//!
//! Every function in the induced RKHS is therefore invariant to item order
//! within each set and symmetric under `(X, Y) -> (Y, X)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::dot;
use crate::set_core::{squared_distance, FeatureVector, ItemSet, ScoreFunction, SetPair};
use crate::Scalar;

/// Kernel on individual items.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BaseKernel<T> {
    /// `exp(-gamma ||x - x'||^2)`
    Rbf { gamma: T },
    /// `<x, x'>`
    Linear,
}

impl<T: Scalar> BaseKernel<T> {
    pub fn rbf(gamma: T) -> Result<Self> {
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(invalid(
                "gamma",
                format!("must be positive and finite, got {gamma}"),
            ));
        }
        Ok(Self::Rbf { gamma })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Rbf { gamma } => Self::rbf(gamma).map(|_| ()),
            Self::Linear => Ok(()),
        }
    }

    #[inline]
    pub(crate) fn eval_slices(&self, a: &[T], b: &[T]) -> T {
        match *self {
            Self::Rbf { gamma } => {
                let d2 = squared_distance(a, b);
                (-gamma * d2).exp()
            }
            Self::Linear => dot(a, b),
        }
    }
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Base kernel between two items.
pub fn base_kernel<T: Scalar>(
    x: &FeatureVector<T>,
    x_prime: &FeatureVector<T>,
    spec: &BaseKernel<T>,
) -> Result<T> {
    check_dims(x.dim(), x_prime.dim())?;
    Ok(spec.eval_slices(x.as_slice(), x_prime.as_slice()))
}

/// Mean-embedding kernel between two sets.
pub fn set_kernel<T: Scalar>(a: &ItemSet<T>, b: &ItemSet<T>, spec: &BaseKernel<T>) -> Result<T> {
    check_dims(a.dim(), b.dim())?;
    Ok(set_kernel_unchecked(a, b, spec))
}

#[inline]
pub(crate) fn set_kernel_unchecked<T: Scalar>(
    a: &ItemSet<T>,
    b: &ItemSet<T>,
    spec: &BaseKernel<T>,
) -> T {
    let mut acc = T::zero();
    for x in a.iter() {
        for y in b.iter() {
            acc += spec.eval_slices(x.as_slice(), y.as_slice());
        }
    }
    acc / T::from_usize_lossy(a.len() * b.len())
}

/// Kernel on set pairs, built on a base item kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairKernel<T> {
    pub base: BaseKernel<T>,
}

impl<T: Scalar> PairKernel<T> {
    pub fn new(base: BaseKernel<T>) -> Result<Self> {
        base.validate()?;
        Ok(Self { base })
    }

    pub fn eval(&self, z: &SetPair<T>, z_prime: &SetPair<T>) -> Result<T> {
        check_dims(z.dim(), z_prime.dim())?;
        Ok(self.eval_unchecked(z, z_prime))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, z: &SetPair<T>, z_prime: &SetPair<T>) -> T {
        let b = &self.base;
        set_kernel_unchecked(&z.first, &z_prime.first, b)
            * set_kernel_unchecked(&z.second, &z_prime.second, b)
            + set_kernel_unchecked(&z.first, &z_prime.second, b)
                * set_kernel_unchecked(&z.second, &z_prime.first, b)
    }
}

pub fn pair_kernel<T: Scalar>(
    z: &SetPair<T>,
    z_prime: &SetPair<T>,
    pk: &PairKernel<T>,
) -> Result<T> {
    pk.eval(z, z_prime)
}

/// Symmetric matrix `G_ij = K(Z_i, Z_j)` over a sequence of anchors.
#[derive(Debug, Clone)]
pub struct GramMatrix<T> {
    n: usize,
    entries: Vec<T>,
    anchors: Arc<[SetPair<T>]>,
}

fn check_anchor_dims<T: Scalar>(anchors: &[SetPair<T>]) -> Result<usize> {
    let d = anchors
        .first()
        .ok_or(Error::EmptyInput("anchor list"))?
        .dim();
    for z in anchors {
        check_dims(d, z.dim())?;
    }
    Ok(d)
}

impl<T: Scalar> GramMatrix<T> {
    pub fn new(anchors: Arc<[SetPair<T>]>, pk: &PairKernel<T>) -> Result<Self> {
        check_anchor_dims(&anchors)?;
        let n = anchors.len();
        let mut entries = vec![T::zero(); n * n];
        // Upper triangle, mirrored, so symmetry is exact.
        for i in 0..n {
            for j in i..n {
                let v = pk.eval_unchecked(&anchors[i], &anchors[j]);
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
        Ok(Self {
            n,
            entries,
            anchors,
        })
    }

    /// Wraps precomputed row-major entries. Rejects non-square or asymmetric input.
    pub fn from_raw(entries: Vec<T>, anchors: Arc<[SetPair<T>]>) -> Result<Self> {
        let n = anchors.len();
        if entries.len() != n * n {
            return Err(invalid(
                "gram",
                format!("{} entries for {} anchors", entries.len(), n),
            ));
        }
        let g = Self {
            n,
            entries,
            anchors,
        };
        if !(g.max_asymmetry() <= T::lit(1e-12)) {
            return Err(invalid("gram", "matrix is not symmetric"));
        }
        Ok(g)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn anchors(&self) -> &Arc<[SetPair<T>]> {
        &self.anchors
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn trace(&self) -> T {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// `G v`
    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.n);
        (0..self.n).map(|i| dot(self.row(i), v)).collect()
    }

    /// `vᵀ G v`
    pub fn quad_form(&self, v: &[T]) -> T {
        dot(v, &self.matvec(v))
    }

    /// Principal submatrix on the given index list, with matching anchors.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let k = idx.len();
        let mut entries = Vec::with_capacity(k * k);
        for &i in idx {
            for &j in idx {
                entries.push(self.get(i, j));
            }
        }
        let anchors: Arc<[SetPair<T>]> = idx.iter().map(|&i| self.anchors[i].clone()).collect();
        Self {
            n: k,
            entries,
            anchors,
        }
    }

    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Eigenvalues by cyclic Jacobi rotations, ascending.
    pub fn eigenvalues(&self) -> Vec<T> {
        jacobi_eigenvalues(self.n, self.entries.clone())
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues().first().copied().unwrap_or_else(T::zero)
    }

    /// PSD within `-1e-8 · trace`.
    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= -T::lit(1e-8) * self.trace().abs()
    }
}

pub fn gram<T: Scalar>(
    anchors: impl Into<Arc<[SetPair<T>]>>,
    pk: &PairKernel<T>,
) -> Result<GramMatrix<T>> {
    GramMatrix::new(anchors.into(), pk)
}

fn jacobi_eigenvalues<T: Scalar>(n: usize, mut a: Vec<T>) -> Vec<T> {
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            diag += a[i * n + i] * a[i * n + i];
            for j in 0..n {
                if i != j {
                    off += a[i * n + j] * a[i * n + j];
                }
            }
        }
        if off <= eps * eps * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

/// `kappa = sup_z sqrt(K(z, z))`.
///
/// For the RBF base the supremum is the analytic value `sqrt(2)`: both set
/// kernels are bounded by 1, and the bound is attained when `X = Y` with all
/// items equal. The linear base is unbounded, so the supremum is replaced by
/// the maximum over a supplied sample.
pub fn kappa<T: Scalar>(pk: &PairKernel<T>, sample: Option<&[SetPair<T>]>) -> Result<T> {
    match pk.base {
        BaseKernel::Rbf { .. } => Ok(T::lit(2.0).sqrt()),
        BaseKernel::Linear => match sample {
            Some(s) if !s.is_empty() => empirical_kappa(pk, s),
            _ => Err(Error::UnboundedKernel),
        },
    }
}

/// `max_z sqrt(K(z, z))` over a sample. Diagnostic for bounded kernels.
pub fn empirical_kappa<T: Scalar>(pk: &PairKernel<T>, sample: &[SetPair<T>]) -> Result<T> {
    if sample.is_empty() {
        return Err(Error::EmptyInput("kappa sample"));
    }
    Ok(sample
        .iter()
        .map(|z| pk.eval_unchecked(z, z).max(T::zero()).sqrt())
        .fold(T::zero(), T::max))
}

/// `gamma = 1 / (2 d · median pairwise squared distance)` over the given items.
pub fn median_heuristic_gamma<'a, T, I>(items: I) -> Result<T>
where
    T: Scalar,
    I: IntoIterator<Item = &'a FeatureVector<T>>,
{
    let items: Vec<&FeatureVector<T>> = items.into_iter().collect();
    if items.len() < 2 {
        return Err(Error::EmptyInput(
            "median heuristic needs at least two items",
        ));
    }
    let d = items[0].dim();
    let mut dists = Vec::with_capacity(items.len() * (items.len() - 1) / 2);
    for i in 0..items.len() {
        check_dims(d, items[i].dim())?;
        for j in 0..i {
            dists.push(items[i].squared_distance(items[j]));
        }
    }
    let mid = dists.len() / 2;
    let cmp = |a: &T, b: &T| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal);
    let (_, &mut upper, _) = dists.select_nth_unstable_by(mid, cmp);
    let median = if dists.len() % 2 == 0 {
        let lower = dists[..mid].iter().copied().fold(T::neg_infinity(), T::max);
        (lower + upper) / T::lit(2.0)
    } else {
        upper
    };
    if !(median > T::zero()) {
        return Err(invalid("gamma", "median pairwise squared distance is zero"));
    }
    Ok(T::one() / (T::lit(2.0) * T::from_usize_lossy(d) * median))
}

/// Kernel expansion `f(z) = Σ_i c_i K(Z_i, z)` over a fixed anchor sequence.
#[derive(Debug, Clone)]
pub struct RkhsScoreFunction<T> {
    coefficients: Vec<T>,
    anchors: Arc<[SetPair<T>]>,
    kernel: PairKernel<T>,
    dim: usize,
}

impl<T: Scalar> RkhsScoreFunction<T> {
    pub fn new(
        coefficients: Vec<T>,
        anchors: Arc<[SetPair<T>]>,
        kernel: PairKernel<T>,
    ) -> Result<Self> {
        let dim = check_anchor_dims(&anchors)?;
        if coefficients.len() != anchors.len() {
            return Err(invalid(
                "coefficients",
                format!(
                    "{} coefficients for {} anchors",
                    coefficients.len(),
                    anchors.len()
                ),
            ));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(invalid("coefficients", "non-finite entry"));
        }
        Ok(Self {
            coefficients,
            anchors,
            kernel,
            dim,
        })
    }

    /// The zero function over the given anchors.
    pub fn zero(anchors: Arc<[SetPair<T>]>, kernel: PairKernel<T>) -> Result<Self> {
        let n = anchors.len();
        Self::new(vec![T::zero(); n], anchors, kernel)
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    pub fn anchors(&self) -> &Arc<[SetPair<T>]> {
        &self.anchors
    }

    pub fn kernel(&self) -> &PairKernel<T> {
        &self.kernel
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Same anchors and kernel, new coefficients.
    pub fn with_coefficients(&self, coefficients: Vec<T>) -> Result<Self> {
        Self::new(coefficients, Arc::clone(&self.anchors), self.kernel)
    }

    pub fn evaluate(&self, z: &SetPair<T>) -> Result<T> {
        check_dims(self.dim, z.dim())?;
        Ok(self.evaluate_unchecked(z))
    }

    fn evaluate_unchecked(&self, z: &SetPair<T>) -> T {
        self.anchors
            .iter()
            .zip(&self.coefficients)
            .filter(|(_, c)| **c != T::zero())
            .map(|(a, &c)| c * self.kernel.eval_unchecked(a, z))
            .sum()
    }

    pub fn evaluate_batch(&self, zs: &[SetPair<T>]) -> Result<Vec<T>> {
        zs.iter().map(|z| self.evaluate(z)).collect()
    }

    /// `‖f‖_K`, building the anchor Gram matrix on the fly.
    pub fn norm(&self) -> T {
        let g = GramMatrix::new(Arc::clone(&self.anchors), &self.kernel)
            .expect("anchors validated at construction");
        rkhs_norm(self, &g).expect("gram built from own anchors")
    }
}

impl<T: Scalar> ScoreFunction<T> for RkhsScoreFunction<T> {
    fn score(&self, z: &SetPair<T>) -> T {
        debug_assert_eq!(self.dim, z.dim());
        self.evaluate_unchecked(z)
    }
}

pub fn evaluate<T: Scalar>(f: &RkhsScoreFunction<T>, z: &SetPair<T>) -> Result<T> {
    f.evaluate(z)
}

fn same_anchors<T: Scalar>(a: &Arc<[SetPair<T>]>, b: &Arc<[SetPair<T>]>) -> bool {
    Arc::ptr_eq(a, b) || a[..] == b[..]
}

/// `‖f‖_K = sqrt(max(cᵀ G c, 0))`.
pub fn rkhs_norm<T: Scalar>(f: &RkhsScoreFunction<T>, g: &GramMatrix<T>) -> Result<T> {
    if !same_anchors(&f.anchors, &g.anchors) {
        return Err(Error::AnchorMismatch);
    }
    Ok(g.quad_form(&f.coefficients).max(T::zero()).sqrt())
}

/// Radial projection onto the ball `‖f‖_K <= r`.
pub fn project_to_ball<T: Scalar>(
    f: &RkhsScoreFunction<T>,
    g: &GramMatrix<T>,
    r: T,
) -> Result<RkhsScoreFunction<T>> {
    if !(r > T::zero()) {
        return Err(invalid("r", format!("radius must be positive, got {r}")));
    }
    let norm = rkhs_norm(f, g)?;
    if norm <= r {
        return Ok(f.clone());
    }
    let scale = r / norm;
    f.with_coefficients(f.coefficients.iter().map(|&c| c * scale).collect())
}

/// `‖f‖_∞ <= kappa · r` for any `f` in the radius-`r` ball, by the reproducing property.
pub fn sup_norm_bound<T: Scalar>(kappa: T, r: T) -> T {
    kappa * r
}
