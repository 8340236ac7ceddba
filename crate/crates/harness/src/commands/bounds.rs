use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use serde::Serialize;
use setmatch::bounds::{
    margin_bound, marginal_rademacher, rkhs_deviation_bound, BoundVariant, Side,
};
use setmatch::kernels::{kappa, BaseKernel, PairKernel};
use setmatch::losses::{empirical_margin_risk, empirical_ranking_error, empirical_risk, Surrogate};
use setmatch::sampling::{derive_seed, seeded_rng};
use setmatch::{BoundReport64, MatchingDataset64, RkhsScoreFunction64};

use super::{streams, GammaSource, KernelChoice};
use crate::config::RunConfig;
use crate::error::Result;
use crate::formats::{load_dataset, sha256_file, ModelFile};
use crate::output::{FileHash, OutDir};

/// Margin-bound ingredients on the first `m = min(m+, m-)` positives and
/// negatives, taken as `m` ranking pairs.
#[derive(Debug, Clone, Serialize)]
pub struct MarginEvaluation {
    pub m: usize,
    pub rho: f64,
    /// Margin risk over the `m` ranking pairs.
    pub empirical_margin_risk: f64,
    /// Ranking error over the same pairs.
    pub empirical_ranking_error: f64,
    pub rad1: f64,
    pub rad1_std_error: f64,
    pub rad2: f64,
    pub rad2_std_error: f64,
    pub expected: BoundReport64,
    pub empirical: BoundReport64,
}

#[allow(clippy::too_many_arguments)]
pub fn evaluate_margin_bound<R: Rng + ?Sized>(
    f: &RkhsScoreFunction64,
    s: &MatchingDataset64,
    pk: &PairKernel<f64>,
    r: f64,
    rho: f64,
    delta: f64,
    n_sigma: usize,
    rng: &mut R,
) -> Result<MarginEvaluation> {
    let m = s.m_pos().min(s.m_neg());
    let paired = MatchingDataset64::new(s.positives()[..m].to_vec(), s.negatives()[..m].to_vec())?;
    let margin = Surrogate::margin(rho)?;
    let mut loss = 0.0;
    let mut errors = 0usize;
    for (p, n) in paired.ranking_pairs() {
        let t = f.evaluate(p)? - f.evaluate(n)?;
        loss += margin.phi(t);
        errors += usize::from(t <= 0.0);
    }
    let empirical_margin_risk = loss / m as f64;
    let empirical_ranking_error = errors as f64 / m as f64;
    let rad1 = marginal_rademacher(&paired, Side::Positives, pk, r, n_sigma, rng)?;
    let rad2 = marginal_rademacher(&paired, Side::Negatives, pk, r, n_sigma, rng)?;
    let bound = |variant| {
        margin_bound(
            empirical_margin_risk,
            rad1.value,
            rad2.value,
            rho,
            m,
            delta,
            variant,
        )
    };
    Ok(MarginEvaluation {
        m,
        rho,
        empirical_margin_risk,
        empirical_ranking_error,
        rad1: rad1.value,
        rad1_std_error: rad1.std_error,
        rad2: rad2.value,
        rad2_std_error: rad2.std_error,
        expected: bound(BoundVariant::Expected)?,
        empirical: bound(BoundVariant::Empirical)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Risks {
    pub empirical_surrogate: f64,
    pub empirical_margin: f64,
    pub empirical_ranking_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsOutput {
    pub config: RunConfig,
    pub inputs: Vec<FileHash>,
    pub kernel: KernelChoice,
    pub radius: f64,
    pub lipschitz: f64,
    pub m_pos: usize,
    pub m_neg: usize,
    pub alpha: f64,
    pub norm: f64,
    pub risks: Risks,
    pub margin: MarginEvaluation,
    pub reports: BTreeMap<String, BTreeMap<String, f64>>,
}

fn flat(report: &BoundReport64) -> BTreeMap<String, f64> {
    report.to_flat_record().into_iter().collect()
}

pub fn run(cfg: &RunConfig, model_path: &Path, dataset: &Path, out: &Path) -> Result<BoundsOutput> {
    let data = load_dataset(dataset)?;
    let model = ModelFile::load(model_path)?;
    let f = model.bind(&data)?;
    let s = &data.dataset;
    let pk = *f.kernel();
    let kernel = KernelChoice {
        kernel: pk.base,
        gamma_source: match pk.base {
            BaseKernel::Rbf { .. } => GammaSource::Model,
            BaseKernel::Linear => GammaSource::NotApplicable,
        },
        kappa: kappa(&pk, Some(&s.all_pairs()))?,
    };
    let b = &cfg.bounds;
    let lipschitz = cfg.lipschitz();
    let mut rng = seeded_rng(derive_seed(cfg.seed, streams::RADEMACHER));
    let margin = evaluate_margin_bound(
        &f,
        s,
        &pk,
        model.radius,
        b.rho,
        b.delta,
        b.n_sigma,
        &mut rng,
    )?;
    let alpha = s.alpha();
    let deviation = rkhs_deviation_bound(
        s.len(),
        alpha,
        b.delta,
        lipschitz,
        kernel.kappa,
        model.radius,
    )?;

    let risks = Risks {
        empirical_surrogate: empirical_risk(&f, s, &cfg.train.surrogate)?.value,
        empirical_margin: empirical_margin_risk(&f, s, b.rho)?.value,
        empirical_ranking_error: empirical_ranking_error(&f, s)?.value,
    };
    let mut reports = BTreeMap::new();
    reports.insert("thm1_expected".to_string(), flat(&margin.expected));
    reports.insert("thm1_empirical".to_string(), flat(&margin.empirical));
    reports.insert("remark2_deviation".to_string(), flat(&deviation));

    let inputs = vec![
        FileHash::of_input(dataset, data.sha256.clone()),
        FileHash::of_input(model_path, sha256_file(model_path)?),
    ];
    let output = BoundsOutput {
        config: cfg.clone(),
        inputs: inputs.clone(),
        kernel,
        radius: model.radius,
        lipschitz,
        m_pos: s.m_pos(),
        m_neg: s.m_neg(),
        alpha,
        norm: f.norm(),
        risks,
        margin,
        reports,
    };
    let mut dir = OutDir::create(out)?;
    dir.write_json("bounds.json", &output)?;
    dir.finish("bounds", cfg, &inputs)?;
    Ok(output)
}
