use std::path::{Path, PathBuf};

use serde_json::json;
use setmatch::sampling::{
    derive_seed, generate_positives, negative_sampling, seeded_rng, split_counts,
};
use setmatch::MatchingDataset64;

use super::streams;
use crate::config::RunConfig;
use crate::error::Result;
use crate::formats::dataset_to_string;
use crate::output::OutDir;

#[derive(Debug, Clone)]
pub struct GenerateReport {
    pub path: PathBuf,
    pub m_pos: usize,
    pub m_neg: usize,
}

/// The dataset described by `cfg.data` under the master seed.
pub fn build_dataset(cfg: &RunConfig) -> Result<MatchingDataset64> {
    let (m_pos, m_neg) = split_counts(cfg.data.m, cfg.data.alpha)?;
    let positives = generate_positives(&cfg.generator, m_pos)?;
    let mut rng = seeded_rng(derive_seed(cfg.seed, streams::NEGATIVES));
    let negatives = negative_sampling(&positives, m_neg, &mut rng)?;
    Ok(MatchingDataset64::new(positives, negatives)?)
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<GenerateReport> {
    let s = build_dataset(cfg)?;
    let meta = json!({
        "generator": cfg.generator,
        "seed": cfg.seed,
        "m": cfg.data.m,
        "alpha": cfg.data.alpha,
        "m_pos": s.m_pos(),
        "m_neg": s.m_neg(),
        "rounding": "half_even",
    });
    let mut dir = OutDir::create(out)?;
    let path = dir.write_bytes("dataset.txt", dataset_to_string(&s, &meta).as_bytes())?;
    dir.finish("generate", cfg, &[])?;
    log::info!(
        "wrote {} ({} positives, {} negatives)",
        path.display(),
        s.m_pos(),
        s.m_neg()
    );
    Ok(GenerateReport {
        path,
        m_pos: s.m_pos(),
        m_neg: s.m_neg(),
    })
}
