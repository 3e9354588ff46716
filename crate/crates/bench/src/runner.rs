use std::time::Instant;

use bigrad::bsg::{StallDetector, TranscriptRow};
use bigrad::data::{
    load_mnist_split, load_sparse_text, rosenbrock, synth_sparse_binary, Dataset, Features,
    SparseTaskSpec, Split,
};
use bigrad::models::{evaluate, Batch, Mlp, Mode, Model, SigmoidRegression, SoftmaxRegression};
use bigrad::rng::derive_seed;
use bigrad::{RngState, Tensor};
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentConfig, OptimizerKind};
use crate::metrics::{MetricRow, MetricsTable};
use crate::optimizer::ParamOptimizer;
use crate::{BenchError, Result};

const STREAM_INIT: u64 = 1;
const STREAM_SUBSET: u64 = 2;
const STREAM_SHUFFLE: u64 = 3;
const STREAM_DROPOUT: u64 = 4;
const STREAM_SPARSE_TRAIN: u64 = 5;
const STREAM_SPARSE_VALID: u64 = 6;

const EVAL_CHUNK: usize = 1000;
const SYNTH_VALID_ROWS: usize = 500;

/// What the run saw before the optimizer touched anything. Two runs that
/// differ only in optimizer must agree on this.
#[derive(Debug, Clone, PartialEq)]
pub struct RunProbe {
    pub first_batch: Vec<usize>,
    pub initial_loss: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub metrics: MetricsTable,
    pub probe: RunProbe,
    /// True when the stall rule ended training before the epoch budget.
    pub stopped_early: bool,
    pub inverted_resets: u64,
    /// Gradient ∞-norm at the final iterate (surfaces only).
    pub final_grad_inf: Option<f64>,
    /// Final iterate (surfaces only).
    pub final_x: Option<Vec<f64>>,
    /// Per-(step, element) BSG transcript (BSG on surfaces only).
    pub transcript: Vec<TranscriptRow>,
}

pub struct SweepEntry {
    pub alpha: f64,
    pub report: RunReport,
}

/// Trains per `cfg` and records train and validation metrics after every
/// epoch. Deterministic given `cfg`, apart from wall-clock time.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::Surface1d | Experiment::SurfaceRosenbrock => run_surface(cfg),
        Experiment::LogregMnist | Experiment::LogregSparse | Experiment::MlpMnist => {
            run_supervised(cfg)
        }
        Experiment::AlphaSweep => Err(BenchError::Config(
            "alpha-sweep runs through the sweep command".into(),
        )),
    }
}

/// One BSG run per α with the same seed, initialisation and data order.
/// Runs execute in parallel; results follow the order of `alphas`.
/// `alpha-sweep` is MNIST logistic regression.
pub fn alpha_sweep(cfg: &ExperimentConfig, alphas: &[f64]) -> Result<Vec<SweepEntry>> {
    if alphas.is_empty() {
        return Err(BenchError::Config("alpha list is empty".into()));
    }
    if cfg.optimizer != OptimizerKind::Bsg {
        return Err(BenchError::Config(format!(
            "alpha sweep requires optimizer bsg, not {}",
            cfg.optimizer.name()
        )));
    }
    let base = ExperimentConfig {
        experiment: match cfg.experiment {
            Experiment::AlphaSweep => Experiment::LogregMnist,
            other => other,
        },
        ..cfg.clone()
    };
    let configs: Vec<ExperimentConfig> = alphas
        .iter()
        .map(|&a| base.with_optimizer(OptimizerKind::Bsg, Some(a)))
        .collect();
    for c in &configs {
        c.validate()?;
    }
    configs
        .par_iter()
        .map(|c| {
            run_experiment(c).map(|report| SweepEntry {
                alpha: c.alpha.expect("bsg config has alpha"),
                report,
            })
        })
        .collect()
}

fn build_optimizer(cfg: &ExperimentConfig, params: &[Tensor]) -> Result<ParamOptimizer> {
    match cfg.bsg() {
        Some(bsg) => ParamOptimizer::bsg(params, &bsg, cfg.hyper()),
        None => ParamOptimizer::plain(params, cfg.hyper()),
    }
}

fn diverged(epoch: usize, step: u64, e: BenchError) -> BenchError {
    match e {
        BenchError::Core(bigrad::Error::NonFinite(what)) => BenchError::Divergence {
            epoch,
            step,
            detail: format!("non-finite {what}"),
        },
        other => other,
    }
}

fn load_data(cfg: &ExperimentConfig, root: &RngState) -> Result<(Dataset, Dataset)> {
    let (train, valid) = match cfg.experiment {
        Experiment::LogregSparse => load_sparse(cfg, root)?,
        _ => (
            load_mnist_split(&cfg.data_dir, Split::Train)?,
            load_mnist_split(&cfg.data_dir, Split::Validation)?,
        ),
    };
    let subset = root.fork(STREAM_SUBSET);
    let train = match cfg.subset_size {
        Some(k) => train.shuffled_prefix(k, &mut subset.fork(0))?,
        None => train,
    };
    let valid = match cfg.valid_subset {
        Some(k) => valid.shuffled_prefix(k, &mut subset.fork(1))?,
        None => valid,
    };
    Ok((train, valid))
}

fn load_sparse(cfg: &ExperimentConfig, root: &RngState) -> Result<(Dataset, Dataset)> {
    let load = |path: &std::path::Path, split| -> Result<Dataset> {
        let (x, labels) = load_sparse_text(path, cfg.vocab)?;
        Ok(Dataset::new(Features::Sparse(x), labels, split)?)
    };
    let synth = |rows, stream, split| -> Result<Dataset> {
        let spec = SparseTaskSpec {
            rows,
            vocab: cfg.vocab,
            ..SparseTaskSpec::default()
        };
        let (x, labels) = synth_sparse_binary(&spec, &mut root.fork(stream))?;
        Ok(Dataset::new(Features::Sparse(x), labels, split)?)
    };
    let train = match &cfg.sparse_train {
        Some(p) => load(p, Split::Train)?,
        None => synth(SparseTaskSpec::default().rows, STREAM_SPARSE_TRAIN, Split::Train)?,
    };
    let valid = match &cfg.sparse_valid {
        Some(p) => load(p, Split::Validation)?,
        None => synth(SYNTH_VALID_ROWS, STREAM_SPARSE_VALID, Split::Validation)?,
    };
    Ok((train, valid))
}

fn build_model(cfg: &ExperimentConfig, inputs: usize) -> Result<Box<dyn Model>> {
    Ok(match cfg.experiment {
        Experiment::LogregSparse => Box::new(SigmoidRegression::new(inputs, cfg.dropout)?),
        Experiment::MlpMnist => Box::new(Mlp::new(inputs, 500, 300, 10)),
        _ => Box::new(SoftmaxRegression::new(inputs, 10)),
    })
}

fn run_supervised(cfg: &ExperimentConfig) -> Result<RunReport> {
    let root = RngState::new(cfg.seed);
    let (train, valid) = load_data(cfg, &root)?;
    let model = build_model(cfg, train.x.cols())?;
    let mut params = model.init(&mut root.fork(STREAM_INIT))?;
    let mut opt = build_optimizer(cfg, params.tensors())?;
    let dropout_seed = derive_seed(cfg.seed, STREAM_DROPOUT);

    let (initial_loss, _) = evaluate(model.as_ref(), &params, &train, EVAL_CHUNK)?;
    let mut probe = RunProbe {
        first_batch: Vec::new(),
        initial_loss,
    };
    log::info!(
        "{} / {}: {} train, {} validation, initial loss {initial_loss:.6}",
        cfg.experiment.name(),
        cfg.optimizer.name(),
        train.len(),
        valid.len()
    );

    let mut metrics = MetricsTable::new();
    let mut stall = StallDetector::default();
    let mut stopped_early = false;
    let mut steps = 0u64;
    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        let order = root.fork(STREAM_SHUFFLE).fork(epoch as u64).permutation(train.len());
        for chunk in order.chunks(cfg.batch_size) {
            if probe.first_batch.is_empty() {
                probe.first_batch = chunk.to_vec();
            }
            let batch = Batch::try_from(train.subset(chunk)?)?;
            let mode = Mode::Train {
                seed: derive_seed(dropout_seed, steps),
            };
            let step_result = model
                .eval(&params, &batch, mode)
                .map_err(BenchError::from)
                .and_then(|e| {
                    if !e.loss.is_finite() {
                        return Err(bigrad::Error::NonFinite("training loss").into());
                    }
                    opt.step(params.tensors_mut(), &e.grads)
                });
            let max_u = step_result.map_err(|e| diverged(epoch, steps + 1, e))?;
            steps += 1;
            if cfg.early_stop && stall.observe(max_u) {
                stopped_early = true;
                break;
            }
        }
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        for (split, data) in [(Split::Train, &train), (Split::Validation, &valid)] {
            let (loss, acc) = evaluate(model.as_ref(), &params, data, EVAL_CHUNK)
                .map_err(|e| diverged(epoch, steps, e.into()))?;
            if !loss.is_finite() {
                return Err(BenchError::Divergence {
                    epoch,
                    step: steps,
                    detail: format!("non-finite {} loss", split.name()),
                });
            }
            metrics.push(MetricRow {
                epoch,
                split,
                loss,
                accuracy: Some(acc),
                wall_ms,
                steps,
            });
        }
        log::info!(
            "epoch {epoch}: train acc {:.4}, validation acc {:.4}",
            metrics.rows()[metrics.rows().len() - 2].accuracy.unwrap_or(f64::NAN),
            metrics.rows()[metrics.rows().len() - 1].accuracy.unwrap_or(f64::NAN),
        );
        if stopped_early {
            break;
        }
    }
    Ok(RunReport {
        metrics,
        probe,
        stopped_early,
        inverted_resets: opt.inverted_resets(),
        final_grad_inf: None,
        final_x: None,
        transcript: Vec::new(),
    })
}

/// Value and gradient of a test surface.
fn surface(experiment: Experiment, x: &[f64]) -> (f64, Vec<f64>) {
    match experiment {
        Experiment::Surface1d => (x[0] * x[0], vec![2.0 * x[0]]),
        _ => rosenbrock(x),
    }
}

fn surface_start(experiment: Experiment) -> Vec<f64> {
    match experiment {
        Experiment::Surface1d => vec![0.5],
        _ => vec![-1.2, 1.0],
    }
}

/// Surfaces take one optimizer step per epoch. There is no held-out data,
/// so the validation row repeats the training value.
fn run_surface(cfg: &ExperimentConfig) -> Result<RunReport> {
    let x0 = surface_start(cfg.experiment);
    let mut params = vec![Tensor::vector(x0.clone())?];
    let mut opt = build_optimizer(cfg, &params)?;
    let (initial_loss, _) = surface(cfg.experiment, &x0);
    let probe = RunProbe {
        first_batch: vec![0],
        initial_loss,
    };
    let mut metrics = MetricsTable::new();
    let mut transcript = Vec::new();
    let mut stall = StallDetector::default();
    let mut stopped_early = false;
    let mut steps = 0u64;
    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        let (_, g) = surface(cfg.experiment, params[0].data());
        let g = Tensor::vector(g)
            .map_err(|e| diverged(epoch, steps + 1, e.into()))?;
        let (max_u, records) = opt
            .step_traced(&mut params, std::slice::from_ref(&g))
            .map_err(|e| diverged(epoch, steps + 1, e))?;
        steps += 1;
        if let (Some(rec), ParamOptimizer::Bsg { states, .. }) = (records.first(), &opt) {
            transcript.extend(TranscriptRow::from_step(steps as usize, &g, rec, &states[0]));
        }
        let (loss, _) = surface(cfg.experiment, params[0].data());
        if !loss.is_finite() {
            return Err(BenchError::Divergence {
                epoch,
                step: steps,
                detail: "non-finite surface value".into(),
            });
        }
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        for split in [Split::Train, Split::Validation] {
            metrics.push(MetricRow {
                epoch,
                split,
                loss,
                accuracy: None,
                wall_ms,
                steps,
            });
        }
        if cfg.early_stop && stall.observe(max_u) {
            stopped_early = true;
            break;
        }
    }
    let x = params[0].data().to_vec();
    let (_, g) = surface(cfg.experiment, &x);
    Ok(RunReport {
        metrics,
        probe,
        stopped_early,
        inverted_resets: opt.inverted_resets(),
        final_grad_inf: Some(g.iter().fold(0.0, |m, v| m.max(v.abs()))),
        final_x: Some(x),
        transcript,
    })
}
