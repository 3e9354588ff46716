use std::path::{Path, PathBuf};

use bigrad::bsg::{BsgConfig, DEFAULT_N_INIT, DEFAULT_P_INIT};
use bigrad::optim::{InnerHyper, InnerKind};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Softmax logistic regression on MNIST.
    LogregMnist,
    /// Sigmoid logistic regression with input dropout on bag-of-words data.
    LogregSparse,
    /// 784-500-300-10 ReLU network on MNIST.
    MlpMnist,
    /// f(x) = x² from x = 0.5; one step per epoch.
    #[serde(rename = "surface-1d")]
    #[value(name = "surface-1d")]
    Surface1d,
    /// 2-D Rosenbrock from (-1.2, 1); one step per epoch.
    SurfaceRosenbrock,
    /// Interval-factor comparison on MNIST logistic regression (sweep only).
    AlphaSweep,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::LogregMnist => "logreg-mnist",
            Experiment::LogregSparse => "logreg-sparse",
            Experiment::MlpMnist => "mlp-mnist",
            Experiment::Surface1d => "surface-1d",
            Experiment::SurfaceRosenbrock => "surface-rosenbrock",
            Experiment::AlphaSweep => "alpha-sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Bsg,
    Adam,
    Sgd,
    Momentum,
    Rmsprop,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Bsg => "bsg",
            OptimizerKind::Adam => "adam",
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Momentum => "momentum",
            OptimizerKind::Rmsprop => "rmsprop",
        }
    }
}

/// First-order method used on its own or inside BSG.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InnerArg {
    Adam,
    Sgd,
    Momentum,
    Rmsprop,
}

impl From<InnerArg> for InnerKind {
    fn from(k: InnerArg) -> Self {
        match k {
            InnerArg::Adam => InnerKind::Adam,
            InnerArg::Sgd => InnerKind::Sgd,
            InnerArg::Momentum => InnerKind::Momentum,
            InnerArg::Rmsprop => InnerKind::RmsProp,
        }
    }
}

/// Everything that determines a run. Identical configs produce identical
/// metrics apart from wall-clock time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub optimizer: OptimizerKind,
    /// Interval factor; required for BSG and rejected otherwise.
    pub alpha: Option<f64>,
    /// Inner optimizer used by BSG.
    pub inner: InnerArg,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub momentum_coef: f64,
    pub decay: f64,
    pub abs_reset: bool,
    pub n_init: f64,
    pub p_init: f64,
    /// Stop once max |u| < 1e-12 for 10 consecutive steps.
    pub early_stop: bool,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Training examples kept after a seeded shuffle.
    pub subset_size: Option<usize>,
    /// Validation examples kept after a seeded shuffle.
    pub valid_subset: Option<usize>,
    pub dropout: f64,
    pub vocab: usize,
    pub data_dir: PathBuf,
    /// Bag-of-words files; the synthetic task is generated when absent.
    pub sparse_train: Option<PathBuf>,
    pub sparse_valid: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let h = InnerHyper::default();
        ExperimentConfig {
            experiment: Experiment::LogregMnist,
            optimizer: OptimizerKind::Bsg,
            alpha: Some(2.0),
            inner: InnerArg::Adam,
            lr: h.lr,
            beta1: h.beta1,
            beta2: h.beta2,
            eps: h.eps,
            momentum_coef: h.momentum_coef,
            decay: h.decay,
            abs_reset: false,
            n_init: DEFAULT_N_INIT,
            p_init: DEFAULT_P_INIT,
            early_stop: false,
            epochs: 20,
            batch_size: 128,
            seed: 7,
            subset_size: Some(10_000),
            valid_subset: Some(2_000),
            dropout: 0.5,
            vocab: 10_000,
            data_dir: PathBuf::from("data/mnist"),
            sparse_train: None,
            sparse_valid: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| BenchError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Same settings with a different optimizer; `alpha` follows the
    /// BSG-only rule.
    pub fn with_optimizer(&self, optimizer: OptimizerKind, alpha: Option<f64>) -> Self {
        ExperimentConfig {
            optimizer,
            alpha,
            ..self.clone()
        }
    }

    /// Kind that produces `u`: the optimizer itself, or BSG's inner method.
    pub fn inner_kind(&self) -> InnerKind {
        match self.optimizer {
            OptimizerKind::Bsg => self.inner.into(),
            OptimizerKind::Adam => InnerKind::Adam,
            OptimizerKind::Sgd => InnerKind::Sgd,
            OptimizerKind::Momentum => InnerKind::Momentum,
            OptimizerKind::Rmsprop => InnerKind::RmsProp,
        }
    }

    pub fn hyper(&self) -> InnerHyper {
        InnerHyper {
            kind: self.inner_kind(),
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            momentum_coef: self.momentum_coef,
            decay: self.decay,
        }
    }

    pub fn bsg(&self) -> Option<BsgConfig> {
        self.alpha.map(|alpha| BsgConfig {
            alpha,
            abs_reset: self.abs_reset,
            n_init: self.n_init,
            p_init: self.p_init,
            inner: self.inner_kind(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BenchError::Config(msg));
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch-size must be >= 1".into());
        }
        match (self.optimizer, self.alpha) {
            (OptimizerKind::Bsg, None) => return bad("alpha is required for bsg".into()),
            (OptimizerKind::Bsg, Some(_)) => {}
            (other, Some(_)) => {
                return bad(format!("alpha only applies to bsg, not {}", other.name()))
            }
            (_, None) => {}
        }
        if let Some(bsg) = self.bsg() {
            bsg.validate()?;
        }
        self.hyper().validate()?;
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        if self.subset_size == Some(0) || self.valid_subset == Some(0) {
            return bad("subset sizes must be >= 1".into());
        }
        if self.vocab == 0 {
            return bad("vocab must be >= 1".into());
        }
        Ok(())
    }
}
