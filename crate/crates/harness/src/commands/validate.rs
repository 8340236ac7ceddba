//! Coverage experiments: repeated independent trials checking the deviation
//! bound (`validate`) and the margin bound (`margin-validate`).

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use setmatch::bounds::rkhs_deviation_bound;
use setmatch::kernels::{GramMatrix, PairKernel};
use setmatch::learner::{random_in_ball, train};
use setmatch::losses::{empirical_risk, McSample, RiskEstimate, Surrogate};
use setmatch::sampling::{
    assemble_with_ratio, derive_seed, negative_sampling, seeded_rng, PairGenerator,
    SyntheticGenerator,
};
use setmatch::{MatchingDataset64, RkhsScoreFunction64, TrainConfig64};

use super::bounds::evaluate_margin_bound;
use super::{generator, reference_kernel, streams, trial_seed, with_threads, KernelChoice};
use crate::config::{ModelChoice, RunConfig};
use crate::error::{HarnessError, Result};
use crate::output::OutDir;

/// Width of the Monte Carlo allowance added to each bound, in standard errors.
pub const SLACK_STD_ERRORS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub m: usize,
    pub m_pos: usize,
    pub m_neg: usize,
    pub alpha: f64,
    pub norm: f64,
    pub empirical_risk: f64,
    pub mc_risk: f64,
    pub mc_std_error: f64,
    pub gap: f64,
    pub epsilon: f64,
    pub slack: f64,
    pub covered: bool,
    pub covered_with_slack: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coverage {
    pub trials: usize,
    /// Trials failing `gap <= bound + slack`.
    pub violations: usize,
    pub violation_fraction: f64,
    /// Trials failing `gap <= bound` with no Monte Carlo allowance.
    pub strict_violations: usize,
    pub strict_violation_fraction: f64,
    pub delta: f64,
    pub passed: bool,
}

impl Coverage {
    fn from_flags(flags: impl Iterator<Item = (bool, bool)>, delta: f64) -> Self {
        let (mut n, mut loose, mut strict) = (0usize, 0usize, 0usize);
        for (covered, with_slack) in flags {
            n += 1;
            strict += usize::from(!covered);
            loose += usize::from(!with_slack);
        }
        let violation_fraction = loose as f64 / n as f64;
        Self {
            trials: n,
            violations: loose,
            violation_fraction,
            strict_violations: strict,
            strict_violation_fraction: strict as f64 / n as f64,
            delta,
            passed: violation_fraction <= delta,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidateSummary {
    pub config: RunConfig,
    pub model: ModelChoice,
    pub kernel: KernelChoice,
    pub lipschitz: f64,
    pub r: f64,
    pub mc_samples_per_side: usize,
    pub coverage: Coverage,
    pub mean_gap: f64,
    pub gap_std_error: f64,
    pub max_gap: f64,
    pub mean_epsilon: f64,
    /// Expected risk of the fixed random model, when one is used.
    pub fixed_model_risk: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ValidateReport {
    pub summary: ValidateSummary,
    pub trials: Vec<TrialRecord>,
}

/// A fixed element of `F_r` drawn independently of every trial sample.
fn fixed_random_model(
    cfg: &RunConfig,
    gen: &SyntheticGenerator<f64>,
    pk: &PairKernel<f64>,
    anchors: usize,
) -> Result<RkhsScoreFunction64> {
    let mut rng = seeded_rng(derive_seed(cfg.seed, streams::RANDOM_MODEL));
    let pairs = gen.sample_positives(anchors, &mut rng)?;
    let gram = GramMatrix::new(pairs.into(), pk)?;
    Ok(random_in_ball(&gram, pk, cfg.train.r, &mut rng)?)
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Writes the rows preceding the first failed trial, then reports the failure.
fn collect_trials<T: Serialize + Clone>(
    results: Vec<Result<T>>,
    dir: &mut OutDir,
    name: &str,
) -> Result<Vec<T>> {
    let mut rows = Vec::with_capacity(results.len());
    for (t, r) in results.into_iter().enumerate() {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                dir.write_csv(name, &rows)?;
                log::error!(
                    "trial {t} failed; {} completed rows written to {name}",
                    rows.len()
                );
                return Err(e);
            }
        }
    }
    Ok(rows)
}

struct GapSetup<'a> {
    gen: &'a SyntheticGenerator<f64>,
    pk: PairKernel<f64>,
    surrogate: Surrogate<f64>,
    train: TrainConfig64,
    mc_n: usize,
    fixed: Option<(RkhsScoreFunction64, RiskEstimate<f64>)>,
    lipschitz: f64,
    kappa: f64,
}

fn gap_trial(setup: &GapSetup, cfg: &RunConfig, t: usize) -> Result<TrialRecord> {
    let v = &cfg.validate;
    let seed = trial_seed(cfg.seed, t);
    let mut rng = seeded_rng(seed);
    let s = assemble_with_ratio(setup.gen, v.m, v.alpha, &mut rng)?;
    let (f, mc) = match &setup.fixed {
        Some((f, risk)) => (f.clone(), *risk),
        None => {
            let (f, _) = train(&s, &setup.pk, &setup.train)?;
            let mc = McSample::draw(&f, setup.gen, setup.mc_n, setup.mc_n, &mut rng)?;
            let risk = mc.surrogate_risk(&setup.surrogate);
            (f, risk)
        }
    };
    let r_hat = empirical_risk(&f, &s, &setup.surrogate)?.value;
    let alpha = s.alpha();
    let epsilon = rkhs_deviation_bound(
        s.len(),
        alpha,
        v.delta,
        setup.lipschitz,
        setup.kappa,
        setup.train.r,
    )?
    .bound_value;
    let se = mc.std_error.unwrap_or(0.0);
    let slack = SLACK_STD_ERRORS * se;
    let gap = (r_hat - mc.value).abs();
    Ok(TrialRecord {
        trial: t,
        seed,
        m: s.len(),
        m_pos: s.m_pos(),
        m_neg: s.m_neg(),
        alpha,
        norm: f.norm(),
        empirical_risk: r_hat,
        mc_risk: mc.value,
        mc_std_error: se,
        gap,
        epsilon,
        slack,
        covered: gap <= epsilon,
        covered_with_slack: gap <= epsilon + slack,
    })
}

pub fn run_validate(cfg: &RunConfig, out: &Path, threads: Option<usize>) -> Result<ValidateReport> {
    let v = &cfg.validate;
    let gen = generator(cfg)?;
    let kernel = reference_kernel(cfg, &gen)?;
    let pk = kernel.pair_kernel();
    let surrogate = cfg.train.surrogate;
    let mc_n = v.mc_factor * v.m;
    let fixed = match v.model {
        ModelChoice::Trained => None,
        ModelChoice::Random => {
            let f = fixed_random_model(cfg, &gen, &pk, v.random_anchors)?;
            let mut rng = seeded_rng(derive_seed(cfg.seed, streams::MONTE_CARLO));
            let risk = McSample::draw(&f, &gen, mc_n, mc_n, &mut rng)?.surrogate_risk(&surrogate);
            Some((f, risk))
        }
    };
    let setup = GapSetup {
        gen: &gen,
        pk,
        surrogate,
        train: cfg.train_config(),
        mc_n,
        fixed,
        lipschitz: cfg.lipschitz(),
        kappa: kernel.kappa,
    };

    let results = with_threads(threads, || {
        (0..v.trials)
            .into_par_iter()
            .map(|t| gap_trial(&setup, cfg, t))
            .collect::<Vec<_>>()
    })?;
    let mut dir = OutDir::create(out)?;
    let trials = collect_trials(results, &mut dir, "validate_trials.csv")?;

    let gaps: Vec<f64> = trials.iter().map(|r| r.gap).collect();
    let (mean_gap, gap_std_error) = mean_and_se(&gaps);
    let summary = ValidateSummary {
        config: cfg.clone(),
        model: v.model,
        kernel,
        lipschitz: setup.lipschitz,
        r: setup.train.r,
        mc_samples_per_side: mc_n,
        coverage: Coverage::from_flags(
            trials.iter().map(|r| (r.covered, r.covered_with_slack)),
            v.delta,
        ),
        mean_gap,
        gap_std_error,
        max_gap: gaps.iter().copied().fold(0.0, f64::max),
        mean_epsilon: trials.iter().map(|r| r.epsilon).sum::<f64>() / trials.len() as f64,
        fixed_model_risk: setup.fixed.as_ref().map(|(_, r)| r.value),
    };
    dir.write_csv("validate_trials.csv", &trials)?;
    dir.write_json("validate_summary.json", &summary)?;
    dir.finish("validate", cfg, &[])?;
    Ok(ValidateReport { summary, trials })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginTrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub m_pos: usize,
    pub m_neg: usize,
    pub m: usize,
    pub rho: f64,
    pub empirical_margin_risk: f64,
    pub empirical_ranking_error: f64,
    pub rad1: f64,
    pub rad1_std_error: f64,
    pub rad2: f64,
    pub rad2_std_error: f64,
    pub complexity: f64,
    pub confidence_expected: f64,
    pub confidence_empirical: f64,
    pub bound_expected: f64,
    pub bound_empirical: f64,
    pub mc_ranking_error: f64,
    pub mc_std_error: f64,
    pub gap: f64,
    pub slack: f64,
    pub covered: bool,
    pub covered_with_slack: bool,
    pub covered_expected: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MarginSummary {
    pub config: RunConfig,
    pub model: ModelChoice,
    pub kernel: KernelChoice,
    pub r: f64,
    pub mc_samples_per_side: usize,
    /// Coverage of the fully empirical bound.
    pub coverage: Coverage,
    /// Coverage of the expected-complexity bound, with the estimated complexities plugged in.
    pub coverage_expected: Coverage,
    pub mean_bound_empirical: f64,
    pub mean_mc_ranking_error: f64,
    pub mean_empirical_margin_risk: f64,
    pub mean_complexity: f64,
}

#[derive(Debug, Clone)]
pub struct MarginReport {
    pub summary: MarginSummary,
    pub trials: Vec<MarginTrialRecord>,
}

struct MarginSetup<'a> {
    gen: &'a SyntheticGenerator<f64>,
    pk: PairKernel<f64>,
    train: TrainConfig64,
    mc_n: usize,
    fixed: Option<(RkhsScoreFunction64, RiskEstimate<f64>)>,
}

fn margin_sample<R: Rng + ?Sized>(
    gen: &SyntheticGenerator<f64>,
    m_pos: usize,
    m_neg: usize,
    rng: &mut R,
) -> Result<MatchingDataset64> {
    let positives = gen.sample_positives(m_pos, rng)?;
    let negatives = negative_sampling(&positives, m_neg, rng)?;
    Ok(MatchingDataset64::new(positives, negatives)?)
}

/// One margin-bound trial at margin `rho`.
fn margin_trial_at(
    setup: &MarginSetup,
    cfg: &RunConfig,
    t: usize,
    rho: f64,
) -> Result<MarginTrialRecord> {
    let mv = &cfg.margin_validate;
    let seed = trial_seed(cfg.seed, t);
    let mut rng = seeded_rng(seed);
    let s = margin_sample(setup.gen, mv.m_pos, mv.m_neg, &mut rng)?;
    let (f, mc) = match &setup.fixed {
        Some((f, risk)) => (f.clone(), *risk),
        None => {
            let (f, _) = train(&s, &setup.pk, &setup.train)?;
            let mc = McSample::draw(&f, setup.gen, setup.mc_n, setup.mc_n, &mut rng)?;
            (f, mc.ranking_error())
        }
    };
    let e = evaluate_margin_bound(
        &f,
        &s,
        &setup.pk,
        setup.train.r,
        rho,
        mv.delta,
        mv.n_sigma,
        &mut rng,
    )?;
    let component = |name: &str, r: &setmatch::BoundReport64| {
        r.component(name)
            .ok_or_else(|| HarnessError::Config(format!("bound report lacks component {name}")))
    };
    let se = mc.std_error.unwrap_or(0.0);
    let slack = SLACK_STD_ERRORS * se;
    let (b_exp, b_emp) = (e.expected.bound_value, e.empirical.bound_value);
    Ok(MarginTrialRecord {
        trial: t,
        seed,
        m_pos: s.m_pos(),
        m_neg: s.m_neg(),
        m: e.m,
        rho,
        empirical_margin_risk: e.empirical_margin_risk,
        empirical_ranking_error: e.empirical_ranking_error,
        rad1: e.rad1,
        rad1_std_error: e.rad1_std_error,
        rad2: e.rad2,
        rad2_std_error: e.rad2_std_error,
        complexity: component("complexity", &e.empirical)?,
        confidence_expected: component("confidence", &e.expected)?,
        confidence_empirical: component("confidence", &e.empirical)?,
        bound_expected: b_exp,
        bound_empirical: b_emp,
        mc_ranking_error: mc.value,
        mc_std_error: se,
        gap: mc.value - e.empirical_ranking_error,
        slack,
        covered: mc.value <= b_emp,
        covered_with_slack: mc.value <= b_emp + slack,
        covered_expected: mc.value <= b_exp + slack,
    })
}

fn margin_setup<'a>(
    cfg: &RunConfig,
    gen: &'a SyntheticGenerator<f64>,
    kernel: &KernelChoice,
) -> Result<MarginSetup<'a>> {
    let mv = &cfg.margin_validate;
    let pk = kernel.pair_kernel();
    let mc_n = mv.mc_factor * (mv.m_pos + mv.m_neg);
    let fixed = match mv.model {
        ModelChoice::Trained => None,
        ModelChoice::Random => {
            let f = fixed_random_model(cfg, gen, &pk, mv.random_anchors)?;
            let mut rng = seeded_rng(derive_seed(cfg.seed, streams::MONTE_CARLO));
            let risk = McSample::draw(&f, gen, mc_n, mc_n, &mut rng)?.ranking_error();
            Some((f, risk))
        }
    };
    Ok(MarginSetup {
        gen,
        pk,
        train: cfg.train_config(),
        mc_n,
        fixed,
    })
}

/// Trial `t` of `margin-validate` recomputed at another margin, with the
/// same sample, model and sign draws.
pub fn margin_trial_with_rho(cfg: &RunConfig, t: usize, rho: f64) -> Result<MarginTrialRecord> {
    let gen = generator(cfg)?;
    let kernel = reference_kernel(cfg, &gen)?;
    let setup = margin_setup(cfg, &gen, &kernel)?;
    margin_trial_at(&setup, cfg, t, rho)
}

pub fn run_margin_validate(
    cfg: &RunConfig,
    out: &Path,
    threads: Option<usize>,
) -> Result<MarginReport> {
    let mv = &cfg.margin_validate;
    let gen = generator(cfg)?;
    let kernel = reference_kernel(cfg, &gen)?;
    let setup = margin_setup(cfg, &gen, &kernel)?;
    let results = with_threads(threads, || {
        (0..mv.trials)
            .into_par_iter()
            .map(|t| margin_trial_at(&setup, cfg, t, mv.rho))
            .collect::<Vec<_>>()
    })?;
    let mut dir = OutDir::create(out)?;
    let trials = collect_trials(results, &mut dir, "margin_trials.csv")?;
    let n = trials.len() as f64;
    let mean = |g: fn(&MarginTrialRecord) -> f64| trials.iter().map(g).sum::<f64>() / n;
    let summary = MarginSummary {
        config: cfg.clone(),
        model: mv.model,
        kernel,
        r: setup.train.r,
        mc_samples_per_side: setup.mc_n,
        coverage: Coverage::from_flags(
            trials.iter().map(|r| (r.covered, r.covered_with_slack)),
            mv.delta,
        ),
        coverage_expected: Coverage::from_flags(
            trials
                .iter()
                .map(|r| (r.mc_ranking_error <= r.bound_expected, r.covered_expected)),
            mv.delta,
        ),
        mean_bound_empirical: mean(|r| r.bound_empirical),
        mean_mc_ranking_error: mean(|r| r.mc_ranking_error),
        mean_empirical_margin_risk: mean(|r| r.empirical_margin_risk),
        mean_complexity: mean(|r| r.complexity),
    };
    dir.write_csv("margin_trials.csv", &trials)?;
    dir.write_json("margin_summary.json", &summary)?;
    dir.finish("margin-validate", cfg, &[])?;
    Ok(MarginReport { summary, trials })
}
