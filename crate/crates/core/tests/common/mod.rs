#![allow(dead_code)]

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use setmatch::set_core::{ItemSet, SetPair};

pub fn random_set<R: Rng>(rng: &mut R, d: usize, max_len: usize) -> ItemSet<f64> {
    let n = rng.random_range(1..=max_len);
    ItemSet::from_rows((0..n).map(|_| {
        (0..d)
            .map(|_| StandardNormal.sample(rng))
            .collect::<Vec<f64>>()
    }))
    .unwrap()
}

pub fn random_pair<R: Rng>(rng: &mut R, d: usize, max_len: usize) -> SetPair<f64> {
    SetPair::new(random_set(rng, d, max_len), random_set(rng, d, max_len)).unwrap()
}

pub fn random_pairs<R: Rng>(rng: &mut R, n: usize, d: usize, max_len: usize) -> Vec<SetPair<f64>> {
    (0..n).map(|_| random_pair(rng, d, max_len)).collect()
}

pub fn gauss<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Smallest eigenvalue by nalgebra's symmetric eigensolver.
pub fn nalgebra_min_eig(g: &setmatch::kernels::GramMatrix<f64>) -> f64 {
    let n = g.size();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| g.get(i, j));
    m.symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}
