use std::path::Path;

use serde::Serialize;
use setmatch::bounds::rkhs_deviation_bound;

use crate::config::{RunConfig, SweepSection};
use crate::error::Result;
use crate::output::OutDir;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub m: usize,
    pub alpha: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSummaryRow {
    pub m: usize,
    pub argmin_alpha: f64,
    pub min_bound: f64,
    pub analytic_alpha: f64,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SweepSummaryRow>,
}

/// `m_points` log-spaced sizes in `[m_min, m_max]`, rounded, duplicates dropped.
pub fn m_grid(s: &SweepSection) -> Vec<usize> {
    let mut out: Vec<usize> = if s.m_points == 1 {
        vec![s.m_min]
    } else {
        let ratio = s.m_max as f64 / s.m_min as f64;
        (0..s.m_points)
            .map(|i| {
                (s.m_min as f64 * ratio.powf(i as f64 / (s.m_points - 1) as f64)).round() as usize
            })
            .collect()
    };
    out.dedup();
    out
}

pub fn compute(s: &SweepSection) -> Result<SweepReport> {
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for m in m_grid(s) {
        let mut best: Option<SweepRow> = None;
        for &alpha in &s.alphas {
            let bound =
                rkhs_deviation_bound(m, alpha, s.delta, s.lipschitz, s.kappa, s.r)?.bound_value;
            let row = SweepRow { m, alpha, bound };
            if best.is_none_or(|b| bound < b.bound) {
                best = Some(row);
            }
            rows.push(row);
        }
        let best = best.expect("alpha grid is non-empty");
        summary.push(SweepSummaryRow {
            m,
            argmin_alpha: best.alpha,
            min_bound: best.bound,
            analytic_alpha: 0.5,
        });
    }
    Ok(SweepReport { rows, summary })
}

#[derive(Debug, Serialize)]
struct GridMetadata<'a> {
    /// `"default"` when the grid is the built-in choice, `"config"` otherwise.
    grid_source: &'static str,
    m: Vec<usize>,
    alphas: &'a [f64],
}

fn grid_metadata(s: &SweepSection) -> GridMetadata<'_> {
    let default = SweepSection::default();
    let is_default = s.m_min == default.m_min
        && s.m_max == default.m_max
        && s.m_points == default.m_points
        && s.alphas == default.alphas;
    GridMetadata {
        grid_source: if is_default { "default" } else { "config" },
        m: m_grid(s),
        alphas: &s.alphas,
    }
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<SweepReport> {
    let report = compute(&cfg.sweep)?;
    let mut dir = OutDir::create(out)?;
    dir.write_csv("sweep.csv", &report.rows)?;
    dir.write_csv("sweep_summary.csv", &report.summary)?;
    dir.write_json("sweep_grid.json", &grid_metadata(&cfg.sweep))?;
    dir.finish("sweep", cfg, &[])?;
    Ok(report)
}
