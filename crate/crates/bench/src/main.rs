use std::path::PathBuf;
use std::process::ExitCode;

use bigrad::bsg::{write_transcript_csv, ALPHA_SWEEP};
use bigrad::data::Split;
use bigrad_bench::config::InnerArg;
use bigrad_bench::{
    alpha_sweep, run_experiment, write_metrics, BenchError, Experiment, ExperimentConfig,
    MetricsFormat, OptimizerKind, Result, RunReport,
};
use clap::{Args, Parser, Subcommand};

/// Benchmarks for binary search gradient optimization.
#[derive(Parser)]
#[command(name = "bigrad", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration and write its metrics.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Metrics file; `.json` selects JSON unless --format is given.
        #[arg(long, default_value = "metrics.csv")]
        out: PathBuf,
        #[arg(long, value_enum)]
        format: Option<MetricsFormat>,
        /// Per-step BSG transcript CSV (surface experiments only).
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Train once per interval factor and write one metrics file each.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_delimiter = ',', default_values_t = ALPHA_SWEEP)]
        alphas: Vec<f64>,
        #[arg(long, default_value = "sweep")]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: MetricsFormat,
        /// Train accuracy whose first epoch is reported per α.
        #[arg(long, default_value_t = 0.85)]
        threshold: f64,
    },
}

/// Overrides applied on top of `--config` (or the defaults).
#[derive(Args)]
struct ConfigArgs {
    /// JSON file with any subset of the fields below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    experiment: Option<Experiment>,
    #[arg(long, value_enum)]
    optimizer: Option<OptimizerKind>,
    /// Interval factor for bsg.
    #[arg(long)]
    alpha: Option<f64>,
    /// Inner optimizer for bsg.
    #[arg(long, value_enum)]
    inner: Option<InnerArg>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    momentum_coef: Option<f64>,
    #[arg(long)]
    decay: Option<f64>,
    #[arg(long)]
    abs_reset: bool,
    #[arg(long)]
    n_init: Option<f64>,
    #[arg(long)]
    p_init: Option<f64>,
    #[arg(long)]
    early_stop: bool,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, visible_alias = "subset")]
    subset_size: Option<usize>,
    #[arg(long)]
    valid_subset: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    vocab: Option<usize>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    sparse_train: Option<PathBuf>,
    #[arg(long)]
    sparse_valid: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    cfg.$field = v;
                }
            )*};
        }
        set!(experiment, inner, lr, beta1, beta2, eps, momentum_coef, decay, n_init, p_init);
        set!(epochs, batch_size, seed, dropout, vocab, data_dir);
        if let Some(opt) = self.optimizer {
            cfg.optimizer = opt;
            if opt != OptimizerKind::Bsg {
                cfg.alpha = None;
            }
        }
        if self.alpha.is_some() {
            cfg.alpha = self.alpha;
        }
        if cfg.optimizer == OptimizerKind::Bsg && cfg.alpha.is_none() {
            cfg.alpha = Some(bigrad::bsg::DEFAULT_ALPHA);
        }
        cfg.abs_reset |= self.abs_reset;
        cfg.early_stop |= self.early_stop;
        if self.subset_size.is_some() {
            cfg.subset_size = self.subset_size;
        }
        if self.valid_subset.is_some() {
            cfg.valid_subset = self.valid_subset;
        }
        if self.sparse_train.is_some() {
            cfg.sparse_train = self.sparse_train;
        }
        if self.sparse_valid.is_some() {
            cfg.sparse_valid = self.sparse_valid;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn summary(label: &str, report: &RunReport, threshold: Option<f64>) {
    let m = &report.metrics;
    let acc = |split| {
        m.last(split)
            .and_then(|r| r.accuracy)
            .map_or("-".to_string(), |a| format!("{a:.4}"))
    };
    let loss = m.last(Split::Train).map_or(f64::NAN, |r| r.loss);
    print!(
        "{label}: epochs {} train loss {loss:.6} train acc {} validation acc {}",
        m.epochs(),
        acc(Split::Train),
        acc(Split::Validation)
    );
    if let Some(t) = threshold {
        match m.epochs_to_accuracy(Split::Train, t) {
            Some(e) => print!(" epochs-to-{t} {e}"),
            None => print!(" epochs-to-{t} not reached"),
        }
    }
    if let Some(g) = report.final_grad_inf {
        print!(" final |grad| {g:.3e}");
    }
    if report.stopped_early {
        print!(" (stalled)");
    }
    println!();
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Run {
            cfg,
            out,
            format,
            transcript,
        } => {
            let cfg = cfg.resolve()?;
            let report = run_experiment(&cfg)?;
            let format = format.unwrap_or_else(|| MetricsFormat::from_path(&out));
            write_metrics(&report.metrics, &out, format)?;
            if let Some(path) = transcript {
                let io = |source| BenchError::Io {
                    path: path.clone(),
                    source,
                };
                let file = std::fs::File::create(&path).map_err(io)?;
                write_transcript_csv(std::io::BufWriter::new(file), &report.transcript)
                    .map_err(io)?;
            }
            summary(cfg.optimizer.name(), &report, None);
            println!("metrics written to {}", out.display());
        }
        Command::Sweep {
            cfg,
            alphas,
            out_dir,
            format,
            threshold,
        } => {
            let mut cfg = cfg.resolve()?;
            if cfg.optimizer != OptimizerKind::Bsg {
                return Err(BenchError::Config("sweep requires --optimizer bsg".into()));
            }
            cfg.alpha = alphas.first().copied();
            let entries = alpha_sweep(&cfg, &alphas)?;
            let ext = match format {
                MetricsFormat::Csv => "csv",
                MetricsFormat::Json => "json",
            };
            for e in &entries {
                let path = out_dir.join(format!("alpha-{}.{ext}", e.alpha));
                write_metrics(&e.report.metrics, &path, format)?;
                summary(&format!("alpha {}", e.alpha), &e.report, Some(threshold));
            }
            println!("metrics written to {}", out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
