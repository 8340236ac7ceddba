use std::path::{Path, PathBuf};

use serde::Serialize;
use setmatch::learner::train;

use super::{choose_kernel, KernelChoice};
use crate::config::RunConfig;
use crate::error::Result;
use crate::formats::{load_dataset, ModelFile};
use crate::output::{FileHash, OutDir};

#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub step: usize,
    pub empirical_risk: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub kernel: KernelChoice,
    pub anchors: usize,
    pub initial_risk: f64,
    pub final_risk: f64,
    pub final_norm: f64,
    pub radius: f64,
    pub dataset_sha256: String,
    #[serde(skip)]
    pub model_path: PathBuf,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

pub fn run(cfg: &RunConfig, dataset: &Path, out: &Path) -> Result<TrainReport> {
    let data = load_dataset(dataset)?;
    let s = &data.dataset;
    let kernel = choose_kernel(cfg, s.items(), &s.all_pairs())?;
    let tc = cfg.train_config();
    let (f, trace) = train(s, &kernel.pair_kernel(), &tc)?;

    let rows: Vec<TraceRow> = trace
        .risks
        .iter()
        .zip(&trace.norms)
        .enumerate()
        .map(|(step, (&empirical_risk, &norm))| TraceRow {
            step,
            empirical_risk,
            norm,
        })
        .collect();
    let model = ModelFile::from_function(&f, tc.r, &data.sha256);

    let mut dir = OutDir::create(out)?;
    let model_path = dir.write_bytes("model.txt", model.to_text().as_bytes())?;
    dir.write_csv("trace.csv", &rows)?;
    let report = TrainReport {
        kernel,
        anchors: trace.anchors,
        initial_risk: trace.risks[0],
        final_risk: *trace.risks.last().expect("trace has the initial risk"),
        final_norm: trace.final_norm,
        radius: tc.r,
        dataset_sha256: data.sha256.clone(),
        model_path,
        trace: rows,
    };
    dir.write_json("train.json", &report)?;
    dir.finish(
        "train",
        cfg,
        &[FileHash::of_input(dataset, data.sha256.clone())],
    )?;
    log::info!(
        "trained on {} anchors: risk {} -> {}, norm {}",
        report.anchors,
        report.initial_risk,
        report.final_risk,
        report.final_norm
    );
    Ok(report)
}
