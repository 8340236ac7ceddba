pub mod bounds;
pub mod generate;
pub mod sweep;
pub mod train;
pub mod validate;

use serde::Serialize;
use setmatch::kernels::{kappa, median_heuristic_gamma, BaseKernel, PairKernel};
use setmatch::sampling::{derive_seed, seeded_rng, PairGenerator, SyntheticGenerator};
use setmatch::set_core::{FeatureVector, SetPair};

use crate::config::RunConfig;
use crate::error::Result;

/// Purpose indices for [`derive_seed`] on the master seed. Indices 0 and 1
/// are taken by the generator (cluster centres and positives).
pub mod streams {
    pub const NEGATIVES: u64 = 2;
    pub const REFERENCE: u64 = 3;
    pub const RADEMACHER: u64 = 4;
    pub const RANDOM_MODEL: u64 = 5;
    pub const MONTE_CARLO: u64 = 6;
    pub const TRIALS: u64 = 16;
}

/// Seed of trial `t`: the trial index mixed into a dedicated trial stream.
pub fn trial_seed(master: u64, t: usize) -> u64 {
    derive_seed(derive_seed(master, streams::TRIALS), t as u64)
}

/// Positive pairs drawn only to fix data-dependent settings (bandwidth, κ for
/// the linear kernel) shared by all trials of a run.
const REFERENCE_PAIRS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaSource {
    Config,
    MedianHeuristic,
    /// Read from a model file.
    Model,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelChoice {
    pub kernel: BaseKernel<f64>,
    pub gamma_source: GammaSource,
    pub kappa: f64,
}

impl KernelChoice {
    pub fn pair_kernel(&self) -> PairKernel<f64> {
        PairKernel { base: self.kernel }
    }
}

/// Kernel for `cfg`, falling back to the median heuristic over `items`.
/// `kappa_sample` is only consulted for the linear kernel.
pub fn choose_kernel<'a>(
    cfg: &RunConfig,
    items: impl IntoIterator<Item = &'a FeatureVector<f64>>,
    kappa_sample: &[SetPair<f64>],
) -> Result<KernelChoice> {
    let (kernel, gamma_source) = match cfg.fixed_kernel()? {
        Some(k @ BaseKernel::Linear) => (k, GammaSource::NotApplicable),
        Some(k) => (k, GammaSource::Config),
        None => (
            BaseKernel::rbf(median_heuristic_gamma(items)?)?,
            GammaSource::MedianHeuristic,
        ),
    };
    let pk = PairKernel::new(kernel)?;
    let kappa = kappa(&pk, Some(kappa_sample))?;
    if kernel == BaseKernel::Linear {
        log::warn!("linear kernel is unbounded; using the empirical kappa {kappa} of the sample");
    }
    Ok(KernelChoice {
        kernel,
        gamma_source,
        kappa,
    })
}

/// Kernel fixed once per run from a reference sample of the generator.
pub fn reference_kernel(cfg: &RunConfig, gen: &SyntheticGenerator<f64>) -> Result<KernelChoice> {
    let mut rng = seeded_rng(derive_seed(cfg.seed, streams::REFERENCE));
    let sample = gen.sample_positives(REFERENCE_PAIRS, &mut rng)?;
    let items = sample
        .iter()
        .flat_map(|z| z.first.iter().chain(z.second.iter()));
    choose_kernel(cfg, items, &sample)
}

pub fn generator(cfg: &RunConfig) -> Result<SyntheticGenerator<f64>> {
    Ok(SyntheticGenerator::new(cfg.generator.clone())?)
}

/// Runs `op` on a pool of `threads` workers, or on rayon's global pool.
pub fn with_threads<R: Send>(threads: Option<usize>, op: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        Some(n) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()?
            .install(op)),
        None => Ok(op()),
    }
}
