use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{bounds, generate, sweep, train, validate};
use crate::config::RunConfig;
use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "setmatch", version, about = "Set-matching bound experiments")]
pub struct Cli {
    /// JSON configuration; omitted sections take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding the one in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for trial loops. Results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset.
    Generate,
    /// Fit a score function on a dataset.
    Train {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Evaluate the margin and deviation bounds for a trained model.
    Bounds {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Deviation bound over a grid of sample sizes and positive ratios.
    Sweep,
    /// Coverage of the deviation bound over repeated trials.
    Validate,
    /// Coverage of the margin bound over repeated trials.
    MarginValidate,
}

/// Result of a command: `passed` is false when a validation check failed.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub message: String,
}

impl Outcome {
    fn ok(message: String) -> Self {
        Self {
            passed: true,
            message,
        }
    }
}

pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    }
    .resolved(cli.seed);
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = resolve_config(cli)?;
    let out = &cli.out;
    Ok(match &cli.command {
        Command::Generate => {
            let r = generate::run(&cfg, out)?;
            Outcome::ok(format!(
                "{}: m+ = {}, m- = {}",
                r.path.display(),
                r.m_pos,
                r.m_neg
            ))
        }
        Command::Train { dataset } => {
            let r = train::run(&cfg, dataset, out)?;
            Outcome::ok(format!(
                "{}: risk {} -> {}, norm {}",
                r.model_path.display(),
                r.initial_risk,
                r.final_risk,
                r.final_norm
            ))
        }
        Command::Bounds { model, dataset } => {
            let r = bounds::run(&cfg, model, dataset, out)?;
            Outcome::ok(format!(
                "margin bound {} (expected complexity), {} (empirical complexity); deviation bound {}",
                r.margin.expected.bound_value,
                r.margin.empirical.bound_value,
                r.reports["remark2_deviation"]["bound_value"]
            ))
        }
        Command::Sweep => {
            let r = sweep::run(&cfg, out)?;
            Outcome::ok(format!(
                "{} grid rows, {} sizes",
                r.rows.len(),
                r.summary.len()
            ))
        }
        Command::Validate => {
            let r = validate::run_validate(&cfg, out, cli.threads)?;
            let c = &r.summary.coverage;
            Outcome {
                passed: c.passed,
                message: format!(
                    "{} of {} trials violated (fraction {}, delta {}); mean gap {}, epsilon {}",
                    c.violations,
                    c.trials,
                    c.violation_fraction,
                    c.delta,
                    r.summary.mean_gap,
                    r.summary.mean_epsilon
                ),
            }
        }
        Command::MarginValidate => {
            let r = validate::run_margin_validate(&cfg, out, cli.threads)?;
            let c = &r.summary.coverage;
            Outcome {
                passed: c.passed,
                message: format!(
                    "{} of {} trials violated (fraction {}, delta {}); mean bound {}, mean risk {}",
                    c.violations,
                    c.trials,
                    c.violation_fraction,
                    c.delta,
                    r.summary.mean_bound_empirical,
                    r.summary.mean_mc_ranking_error
                ),
            }
        }
    })
}
