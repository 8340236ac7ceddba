//! JSON run configuration. Every field has a default, so `{}` is a valid file.

use std::path::Path;

use serde::{Deserialize, Serialize};
use setmatch::kernels::BaseKernel;
use setmatch::losses::Surrogate;
use setmatch::sampling::{split_counts, GeneratorSpec};
use setmatch::{Surrogate64, TrainConfig64};

use crate::error::{io_err, HarnessError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed. Also seeds the generator's cluster centres.
    pub seed: u64,
    pub generator: GeneratorSpec,
    pub kernel: KernelSection,
    pub train: TrainSection,
    pub data: DataSection,
    pub bounds: BoundsSection,
    pub sweep: SweepSection,
    pub validate: ValidateSection,
    pub margin_validate: MarginValidateSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Rbf,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSection {
    pub kind: KernelKind,
    /// RBF bandwidth; `null` selects the median heuristic.
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub r: f64,
    pub steps: usize,
    pub step_size: f64,
    pub surrogate: Surrogate64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub m: usize,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSection {
    pub delta: f64,
    pub rho: f64,
    pub n_sigma: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub m_min: usize,
    pub m_max: usize,
    pub m_points: usize,
    pub alphas: Vec<f64>,
    pub lipschitz: f64,
    pub kappa: f64,
    pub r: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    /// Train on each trial's sample.
    Trained,
    /// One fixed random element of the ball, drawn independently of all samples.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateSection {
    pub trials: usize,
    pub m: usize,
    pub alpha: f64,
    pub delta: f64,
    pub model: ModelChoice,
    /// Anchor count of the random model.
    pub random_anchors: usize,
    /// Fresh positives and negatives per Monte Carlo estimate, as a multiple of `m`.
    pub mc_factor: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarginValidateSection {
    pub trials: usize,
    pub m_pos: usize,
    pub m_neg: usize,
    pub rho: f64,
    pub delta: f64,
    pub n_sigma: usize,
    pub model: ModelChoice,
    pub random_anchors: usize,
    pub mc_factor: usize,
}

impl Default for KernelSection {
    fn default() -> Self {
        Self {
            kind: KernelKind::Rbf,
            gamma: None,
        }
    }
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig64::default();
        Self {
            r: d.r,
            steps: d.steps,
            step_size: d.step_size,
            surrogate: d.surrogate,
        }
    }
}

impl Default for DataSection {
    fn default() -> Self {
        Self { m: 100, alpha: 0.5 }
    }
}

impl Default for BoundsSection {
    fn default() -> Self {
        Self {
            delta: 0.05,
            rho: 1.0,
            n_sigma: 2000,
        }
    }
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            m_min: 10,
            m_max: 10_000,
            m_points: 20,
            alphas: (1..20).map(|k| k as f64 / 20.0).collect(),
            lipschitz: 1.0,
            kappa: std::f64::consts::SQRT_2,
            r: 1.0,
            delta: 0.05,
        }
    }
}

impl Default for ValidateSection {
    fn default() -> Self {
        Self {
            trials: 200,
            m: 100,
            alpha: 0.5,
            delta: 0.05,
            model: ModelChoice::Trained,
            random_anchors: 20,
            mc_factor: 20,
        }
    }
}

impl Default for MarginValidateSection {
    fn default() -> Self {
        Self {
            trials: 200,
            m_pos: 50,
            m_neg: 50,
            rho: 1.0,
            delta: 0.05,
            n_sigma: 2000,
            model: ModelChoice::Trained,
            random_anchors: 20,
            mc_factor: 20,
        }
    }
}

fn bad(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

fn check_delta(name: &str, delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(bad(format!("{name} must lie in (0, 1), got {delta}")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(format!("{name} must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|source| HarnessError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Configuration after applying the master seed to the generator.
    pub fn resolved(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        self.generator.seed = self.seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        if let Some(g) = self.kernel.gamma {
            if self.kernel.kind == KernelKind::Linear {
                return Err(bad("gamma is only meaningful for the rbf kernel"));
            }
            check_positive("kernel.gamma", g)?;
        }
        self.train_config().validate()?;
        split_counts(self.data.m, self.data.alpha)?;
        check_delta("bounds.delta", self.bounds.delta)?;
        check_positive("bounds.rho", self.bounds.rho)?;
        if self.bounds.n_sigma == 0 {
            return Err(bad("bounds.n_sigma must be at least 1"));
        }

        let s = &self.sweep;
        if s.m_min == 0 || s.m_max < s.m_min || s.m_points == 0 {
            return Err(bad(format!(
                "sweep needs 1 <= m_min <= m_max and m_points >= 1, got [{}, {}] x {}",
                s.m_min, s.m_max, s.m_points
            )));
        }
        if s.alphas.is_empty() || s.alphas.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
            return Err(bad("sweep.alphas must be a non-empty list inside (0, 1)"));
        }
        check_positive("sweep.lipschitz", s.lipschitz)?;
        check_positive("sweep.kappa", s.kappa)?;
        check_positive("sweep.r", s.r)?;
        check_delta("sweep.delta", s.delta)?;

        let v = &self.validate;
        if v.trials == 0 || v.mc_factor == 0 || v.random_anchors == 0 {
            return Err(bad(
                "validate.trials, mc_factor and random_anchors must be at least 1",
            ));
        }
        split_counts(v.m, v.alpha)?;
        check_delta("validate.delta", v.delta)?;

        let mv = &self.margin_validate;
        if mv.trials == 0 || mv.mc_factor == 0 || mv.random_anchors == 0 || mv.n_sigma == 0 {
            return Err(bad("margin_validate counts must be at least 1"));
        }
        if mv.m_pos < 2 || mv.m_neg < 1 {
            return Err(bad("margin_validate needs m_pos >= 2 and m_neg >= 1"));
        }
        check_positive("margin_validate.rho", mv.rho)?;
        check_delta("margin_validate.delta", mv.delta)?;
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig64 {
        TrainConfig64 {
            r: self.train.r,
            steps: self.train.steps,
            step_size: self.train.step_size,
            surrogate: self.train.surrogate,
        }
    }

    /// Base kernel with an explicit bandwidth, or `None` if the median heuristic is needed.
    pub fn fixed_kernel(&self) -> Result<Option<BaseKernel<f64>>> {
        Ok(match (self.kernel.kind, self.kernel.gamma) {
            (KernelKind::Linear, _) => Some(BaseKernel::Linear),
            (KernelKind::Rbf, Some(g)) => Some(BaseKernel::rbf(g)?),
            (KernelKind::Rbf, None) => None,
        })
    }

    pub fn lipschitz(&self) -> f64 {
        Surrogate::lipschitz(&self.train.surrogate)
    }
}
