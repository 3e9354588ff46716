//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p bigrad-bench --test acceptance`. Metric curves for
//! the training criteria are written under the cargo target tmp dir.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use bigrad::bsg::{
    bisect_minimize, bsg_init, bsg_step_traced, scalar_trace, BsgConfig, ALPHA_SWEEP,
};
use bigrad::data::{synth_quadratic, synth_sparse_binary, Features, SparseTaskSpec, Split};
use bigrad::models::{
    evaluate, Batch, GradCheck, Mlp, Mode, Model, Params, SigmoidRegression, SoftmaxRegression,
};
use bigrad::optim::InnerHyper;
use bigrad::{RngState, Tensor};
use bigrad_bench::{
    alpha_sweep, run_experiment, write_metrics, Experiment, ExperimentConfig, MetricsFormat,
    MetricsTable, OptimizerKind, RunReport,
};

/// Hand-executed transcript for f(x) = x² from x = 0.5, α = 2, Adam
/// defaults. Columns: x after the step, g, u, n, p, r.
const TRANSCRIPT: [[f64; 6]; 10] = [
    [0.49800000002, 1.0, 0.0009999999900000003, 0.49700000003, 0.49900000001, 1.0],
    [0.4970000532697676, 0.99600000004, 0.000999893510464779, 0.49700000003, 0.49700010650953524, 0.0],
    [0.4950004751318605, 0.9940001065395352, 0.0009997890689535155, 0.49400068606290704, 0.49600026420081406, 1.0],
    [0.4940007929988428, 0.990000950263721, 0.000999575197081935, 0.49400068606290704, 0.4940008999347786, 0.0],
    [0.49200206116856326, 0.9880015859976856, 0.0009993659151397753, 0.4910026952534235, 0.49300142708370304, 1.0],
    [0.4910028554483244, 0.9840041223371265, 0.0009990455253379611, 0.4910026952534235, 0.4910030156432253, 0.0],
    [0.4890053903559668, 0.9820057108966488, 0.0009987325461788008, 0.48800665780978797, 0.49000412290214557, 1.0],
    [0.48800687042301316, 0.9780107807119336, 0.0009983073197285064, 0.48800665780978797, 0.4880070830362383, 0.0],
    [0.4860110850297724, 0.9760137408460263, 0.0009978926966203573, 0.4850131923331521, 0.4870089777263928, 1.0],
    [0.48501345610089885, 0.9720221700595448, 0.0009973651611268333, 0.4850131923331521, 0.4850137198686456, 0.0],
];

type Outcome = Result<String, String>;

fn check(ok: bool, pass: String, fail: String) -> Outcome {
    if ok {
        Ok(pass)
    } else {
        Err(fail)
    }
}

fn mnist_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist")
}

fn out_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance")
}

fn save(table: &MetricsTable, name: &str) -> PathBuf {
    let path = out_dir().join(name);
    write_metrics(table, &path, MetricsFormat::Csv).expect("metrics written");
    path
}

fn curve(table: &MetricsTable) -> String {
    table
        .split_rows(Split::Train)
        .map(|r| format!("{:.4}", r.accuracy.unwrap_or(f64::NAN)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn criterion_1() -> Outcome {
    let square = |x: f64| (x * x, 2.0 * x);
    let trace = scalar_trace(square, 0.5, 10, &BsgConfig::default(), &InnerHyper::default())
        .map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig {
        experiment: Experiment::Surface1d,
        epochs: 10,
        ..ExperimentConfig::default()
    };
    let runner = run_experiment(&cfg).map_err(|e| e.to_string())?.transcript;
    let mut worst = 0.0f64;
    for (i, want) in TRANSCRIPT.iter().enumerate() {
        let t = &trace[i];
        let r = &runner[i];
        let got = [t.x, t.g, t.u, t.n, t.p, f64::from(u8::from(t.reset))];
        let via_runner = [r.x, r.g, r.u, r.n, r.p, f64::from(u8::from(r.reset))];
        for k in 0..6 {
            worst = worst
                .max((got[k] - want[k]).abs())
                .max((via_runner[k] - want[k]).abs());
        }
    }
    check(
        worst <= 1e-12,
        format!("10 steps match the hand transcript (max deviation {worst:.1e})"),
        format!("max deviation {worst:.3e} exceeds 1e-12"),
    )
}

fn random_steps(abs_reset: bool, rng: &mut RngState) -> Result<(usize, usize), String> {
    let (mut steps, mut resets) = (0, 0);
    while steps < 1000 {
        let alpha = ALPHA_SWEEP[rng.below(ALPHA_SWEEP.len())];
        let cfg = BsgConfig {
            abs_reset,
            ..BsgConfig::with_alpha(alpha)
        };
        let h = InnerHyper {
            lr: 10f64.powf(-1.0 - 3.0 * rng.next_f64()),
            ..InnerHyper::default()
        };
        let mut state = bsg_init(&[1], &cfg).map_err(|e| e.to_string())?;
        let mut x = Tensor::scalar(rng.next_f64() * 4.0 - 2.0).unwrap();
        for _ in 0..50 {
            let scale = 10f64.powf(4.0 * rng.next_f64() - 2.0);
            let g = Tensor::scalar((rng.next_f64() * 2.0 - 1.0) * scale).unwrap();
            let (n0, p0) = (state.n.data()[0], state.p.data()[0]);
            let rec = bsg_step_traced(&x, &g, &mut state, &h).map_err(|e| e.to_string())?;
            let (n, p, u) = (state.n.data()[0], state.p.data()[0], rec.u.data()[0]);
            let x_next = rec.x_next.data()[0];
            if x_next.to_bits() != ((n + p) / 2.0).to_bits() {
                return Err(format!("x_next {x_next} != (n+p)/2 at step {steps}"));
            }
            if rec.reset[0] != (n0 - p0 + u.abs() > 0.0) {
                return Err(format!("reset flag wrong at step {steps}"));
            }
            if abs_reset && rec.reset[0] {
                resets += 1;
                let width = p - n;
                let want = alpha * u.abs();
                if width.is_nan() || width <= 0.0 || (width - want).abs() > 1e-12 * n.abs().max(p.abs()).max(1.0) {
                    return Err(format!("abs reset width {width} != α|u| = {want}"));
                }
            }
            x = rec.x_next;
            steps += 1;
        }
    }
    Ok((steps, resets))
}

fn criterion_2() -> Outcome {
    let rng = RngState::new(2);
    let (signed, _) = random_steps(false, &mut rng.fork(0))?;
    let (absolute, resets) = random_steps(true, &mut rng.fork(1))?;
    check(
        resets > 0,
        format!("{signed} signed and {absolute} abs-reset steps hold the midpoint and reset rules ({resets} abs resets)"),
        "no abs resets were exercised".into(),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = RngState::new(3);
    let len = 100;
    let x0 = rng.uniform(&[len], -3.0, 3.0).unwrap();
    let curv = rng.uniform(&[len], 0.1, 50.0).unwrap();
    let grad = |x: &Tensor| x.mul(&curv).unwrap();
    let cfg = BsgConfig::default();
    let h = InnerHyper {
        lr: 0.01,
        ..InnerHyper::default()
    };
    let steps = 300;

    let mut state = bsg_init(&[len], &cfg).unwrap();
    let mut x = x0.clone();
    for _ in 0..steps {
        x = bsg_step_traced(&x, &grad(&x), &mut state, &h).unwrap().x_next;
    }
    for i in 0..len {
        let mut s = bsg_init(&[1], &cfg).unwrap();
        let mut xi = Tensor::scalar(x0.data()[i]).unwrap();
        let c = curv.data()[i];
        for _ in 0..steps {
            let g = Tensor::scalar(xi.data()[0] * c).unwrap();
            xi = bsg_step_traced(&xi, &g, &mut s, &h).unwrap().x_next;
        }
        let same = xi.data()[0].to_bits() == x.data()[i].to_bits()
            && s.n.data()[0].to_bits() == state.n.data()[i].to_bits()
            && s.p.data()[0].to_bits() == state.p.data()[i].to_bits();
        if !same {
            return Err(format!("element {i} differs from its scalar run"));
        }
    }
    Ok(format!("{len}-element run over {steps} steps is bitwise-equal to {len} scalar runs"))
}

fn criterion_4() -> Outcome {
    let h = InnerHyper::default();
    let cfg = BsgConfig::default();
    let tol = 1e-8;
    let (mut converged, mut worst_bisect, mut one_d) = (0, 0.0f64, 0);
    let mut misses = Vec::new();
    for i in 0..100u64 {
        let dim = 1 + (i % 10) as usize;
        let cond = 100f64.powf(RngState::new(1000 + i).next_f64());
        let q = synth_quadratic(i, dim, cond).map_err(|e| e.to_string())?;
        let mut state = bsg_init(&[dim], &cfg).unwrap();
        let mut x = Tensor::zeros(&[dim]).unwrap();
        let mut reached = false;
        for _ in 0..2000 {
            let g = Tensor::vector(q.grad(x.data())).unwrap();
            x = bsg_step_traced(&x, &g, &mut state, &h).unwrap().x_next;
            let gnorm = q.grad(x.data()).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            reached |= gnorm < 1e-3;
        }
        if reached {
            converged += 1;
        } else {
            misses.push(i);
        }
        if dim == 1 {
            one_d += 1;
            let d = q.diag[0];
            let c = q.center[0];
            let b = bisect_minimize(|t| d * (t - c), -10.0, 10.0, tol, 200)
                .map_err(|e| e.to_string())?;
            worst_bisect = worst_bisect.max((b.x - x.data()[0]).abs());
        }
    }
    check(
        converged >= 95 && worst_bisect <= 10.0 * tol,
        format!(
            "{converged}/100 quadratics reach |grad|∞ < 1e-3 within 2000 steps; \
             bisection within {worst_bisect:.1e} of BSG on {one_d} 1-D cases"
        ),
        format!(
            "{converged}/100 converged (misses {misses:?}); bisection gap {worst_bisect:.3e} (limit {:.0e})",
            10.0 * tol
        ),
    )
}

fn spread(params: &Params, rng: &mut RngState, scale: f64) -> Params {
    let entries = params
        .names()
        .iter()
        .zip(params.tensors())
        .map(|(n, t)| (n.as_str(), rng.uniform(t.shape(), -scale, scale).unwrap()))
        .collect();
    Params::new(entries)
}

fn dense_batch(rng: &mut RngState, b: usize, d: usize, c: usize) -> Batch {
    let x = rng.uniform(&[b, d], -1.0, 1.0).unwrap();
    let labels = (0..b).map(|_| rng.below(c)).collect();
    Batch::new(Features::Dense(x), labels).unwrap()
}

fn criterion_5() -> Outcome {
    let eps = 1e-6;
    let mut worst = [0.0f64; 3];
    let softmax = SoftmaxRegression::new(8, 4);
    let mlp = Mlp::new(8, 6, 5, 3);
    let sigmoid = SigmoidRegression::new(1000, 0.5).map_err(|e| e.to_string())?;
    let spec = SparseTaskSpec {
        rows: 6,
        vocab: 1000,
        words_per_row: 20,
        ..SparseTaskSpec::default()
    };
    for seed in 0..20u64 {
        let mut rng = RngState::new(500 + seed);
        let params = spread(&softmax.init(&mut rng).unwrap(), &mut rng, 1.0);
        let batch = dense_batch(&mut rng, 5, 8, 4);
        let r = GradCheck::new(eps)
            .run(&softmax, &params, &batch, Mode::Eval)
            .map_err(|e| e.to_string())?;
        worst[0] = worst[0].max(r.max_rel_err);

        let params = spread(&mlp.init(&mut rng).unwrap(), &mut rng, 1.0);
        let batch = dense_batch(&mut rng, 4, 8, 3);
        let r = GradCheck::new(eps)
            .run(&mlp, &params, &batch, Mode::Eval)
            .map_err(|e| e.to_string())?;
        worst[1] = worst[1].max(r.max_rel_err);

        let params = spread(&sigmoid.init(&mut rng).unwrap(), &mut rng, 0.1);
        let (x, labels) = synth_sparse_binary(&spec, &mut rng).map_err(|e| e.to_string())?;
        let mut coords: Vec<(usize, usize)> = (0..x.rows())
            .flat_map(|r| x.row(r).0.to_vec())
            .map(|i| (0, i))
            .collect();
        coords.sort_unstable();
        coords.dedup();
        coords.push((1, 0));
        let batch = Batch::new(Features::Sparse(x), labels).unwrap();
        let r = GradCheck::new(eps)
            .run_on(&sigmoid, &params, &batch, Mode::Train { seed }, &coords)
            .map_err(|e| e.to_string())?;
        worst[2] = worst[2].max(r.max_rel_err);
    }
    let msg = format!(
        "max relative error softmax {:.1e}, mlp {:.1e}, sparse sigmoid {:.1e} over 20 instances each",
        worst[0], worst[1], worst[2]
    );
    check(worst.iter().all(|&w| w < 1e-5), msg.clone(), msg)
}

fn mnist_cfg(optimizer: OptimizerKind, alpha: Option<f64>, epochs: usize) -> ExperimentConfig {
    ExperimentConfig {
        experiment: Experiment::LogregMnist,
        epochs,
        subset_size: Some(10_000),
        valid_subset: Some(2_000),
        data_dir: mnist_dir(),
        ..ExperimentConfig::default()
    }
    .with_optimizer(optimizer, alpha)
}

/// Runs `cfg` twice and records whether the metrics agree bitwise.
fn twice(cfg: &ExperimentConfig, label: &str, determinism: &mut Vec<String>) -> Result<RunReport, String> {
    let a = run_experiment(cfg).map_err(|e| format!("{label}: {e}"))?;
    let b = run_experiment(cfg).map_err(|e| format!("{label}: {e}"))?;
    if !a.metrics.same_outcome(&b.metrics) || a.probe != b.probe {
        determinism.push(label.to_string());
    }
    Ok(a)
}

fn criterion_6(determinism: &mut Vec<String>) -> Outcome {
    let epochs = 20;
    let bsg = twice(&mnist_cfg(OptimizerKind::Bsg, Some(2.0), epochs), "logreg-mnist bsg", determinism)?;
    let adam = twice(&mnist_cfg(OptimizerKind::Adam, None, epochs), "logreg-mnist adam", determinism)?;
    let p1 = save(&bsg.metrics, "c6-bsg.csv");
    save(&adam.metrics, "c6-adam.csv");
    println!("    bsg  train acc: {}", curve(&bsg.metrics));
    println!("    adam train acc: {}", curve(&adam.metrics));
    println!("    curves: {}", p1.parent().unwrap_or(Path::new(".")).display());
    if bsg.probe != adam.probe {
        return Err("bsg and adam runs saw different data order or initial loss".into());
    }
    let eb = bsg.metrics.epochs_to_accuracy(Split::Train, 0.9);
    let ea = adam.metrics.epochs_to_accuracy(Split::Train, 0.9);
    let ok = match (eb, ea) {
        (Some(b), Some(a)) => b <= a,
        (Some(_), None) => true,
        _ => false,
    };
    check(
        ok,
        format!("epochs to 90% train accuracy: bsg {eb:?}, adam {ea:?}"),
        format!("epochs to 90% train accuracy: bsg {eb:?} > adam {ea:?}"),
    )
}

fn criterion_7(determinism: &mut Vec<String>) -> Outcome {
    let epochs = 20;
    let cfg = ExperimentConfig {
        experiment: Experiment::AlphaSweep,
        ..mnist_cfg(OptimizerKind::Bsg, Some(2.0), epochs)
    };
    let alphas = [0.5, 2.0, 10.0];
    let first = alpha_sweep(&cfg, &alphas).map_err(|e| e.to_string())?;
    let again = alpha_sweep(&cfg, &alphas).map_err(|e| e.to_string())?;
    if first
        .iter()
        .zip(&again)
        .any(|(a, b)| !a.report.metrics.same_outcome(&b.report.metrics))
    {
        determinism.push("alpha sweep".into());
    }
    let mut reached = Vec::new();
    for e in &first {
        save(&e.report.metrics, &format!("c7-alpha-{}.csv", e.alpha));
        println!("    alpha {:>4} train acc: {}", e.alpha, curve(&e.report.metrics));
        reached.push(
            e.report
                .metrics
                .epochs_to_accuracy(Split::Train, 0.85)
                .unwrap_or(epochs + 1),
        );
    }
    let inversions = reached.windows(2).filter(|w| w[1] > w[0]).count();
    let listing = alphas
        .iter()
        .zip(&reached)
        .map(|(a, e)| format!("α={a}: {e}"))
        .collect::<Vec<_>>()
        .join(", ");
    check(
        inversions <= 1,
        format!("epochs to 85% train accuracy {listing} ({inversions} inversions)"),
        format!("epochs to 85% train accuracy {listing} has {inversions} inversions"),
    )
}

fn criterion_8(determinism: &mut Vec<String>) -> Outcome {
    let cfg = ExperimentConfig {
        experiment: Experiment::LogregSparse,
        epochs: 40,
        dropout: 0.5,
        ..ExperimentConfig::default()
    };
    let report = twice(&cfg, "logreg-sparse bsg", determinism)?;
    save(&report.metrics, "c8-sparse.csv");
    println!("    sparse train acc: {}", curve(&report.metrics));

    let spec = SparseTaskSpec::default();
    let (x, labels) = synth_sparse_binary(&spec, &mut RngState::new(cfg.seed).fork(5))
        .map_err(|e| e.to_string())?;
    let train = bigrad::data::Dataset::new(Features::Sparse(x), labels, Split::Train)
        .map_err(|e| e.to_string())?;
    let model = SigmoidRegression::new(cfg.vocab, cfg.dropout).unwrap();
    let zeros = Params::new(vec![
        ("w", Tensor::zeros(&[cfg.vocab]).unwrap()),
        ("b", Tensor::zeros(&[1]).unwrap()),
    ]);
    let (_, baseline) = evaluate(&model, &zeros, &train, 1000).map_err(|e| e.to_string())?;
    let last = report.metrics.last(Split::Train).and_then(|r| r.accuracy).unwrap_or(0.0);
    let gap = (last - baseline) * 100.0;
    check(
        report.metrics.epochs() == 40 && gap >= 20.0,
        format!("40 epochs without divergence; final train accuracy {last:.4} vs zero-weights {baseline:.4} (+{gap:.1} points)"),
        format!("final train accuracy {last:.4} vs zero-weights {baseline:.4} (+{gap:.1} points, need 20)"),
    )
}

fn criterion_9(determinism: &mut Vec<String>) -> Outcome {
    let surfaces = [
        (Experiment::Surface1d, OptimizerKind::Bsg, 0.01),
        (Experiment::SurfaceRosenbrock, OptimizerKind::Bsg, 0.01),
        (Experiment::SurfaceRosenbrock, OptimizerKind::Momentum, 1e-4),
    ];
    for (experiment, optimizer, lr) in surfaces {
        let alpha = (optimizer == OptimizerKind::Bsg).then_some(2.0);
        let cfg = ExperimentConfig {
            experiment,
            epochs: 500,
            lr,
            ..ExperimentConfig::default()
        }
        .with_optimizer(optimizer, alpha);
        twice(&cfg, &format!("{} {}", experiment.name(), optimizer.name()), determinism)?;
    }
    let mlp = ExperimentConfig {
        experiment: Experiment::MlpMnist,
        epochs: 1,
        subset_size: Some(1000),
        valid_subset: Some(500),
        data_dir: mnist_dir(),
        ..ExperimentConfig::default()
    };
    twice(&mlp, "mlp-mnist bsg", determinism)?;
    for opt in [OptimizerKind::Sgd, OptimizerKind::Rmsprop] {
        twice(&mnist_cfg(opt, None, 2), &format!("logreg-mnist {}", opt.name()), determinism)?;
    }
    check(
        determinism.is_empty(),
        "every rerun is bitwise-identical apart from wall_ms".into(),
        format!("reruns differ: {}", determinism.join(", ")),
    )
}

fn main() -> ExitCode {
    let mut determinism = Vec::new();
    let mut failures = 0;
    let mut report = |id: u32, outcome: Outcome, start: Instant| {
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS criterion {id}: {msg} [{secs:.1}s]"),
            Err(msg) => {
                failures += 1;
                println!("FAIL criterion {id}: {msg} [{secs:.1}s]");
            }
        }
    };
    let t = Instant::now();
    report(1, criterion_1(), t);
    let t = Instant::now();
    report(2, criterion_2(), t);
    let t = Instant::now();
    report(3, criterion_3(), t);
    let t = Instant::now();
    report(4, criterion_4(), t);
    let t = Instant::now();
    report(5, criterion_5(), t);
    let t = Instant::now();
    report(6, criterion_6(&mut determinism), t);
    let t = Instant::now();
    report(7, criterion_7(&mut determinism), t);
    let t = Instant::now();
    report(8, criterion_8(&mut determinism), t);
    let t = Instant::now();
    report(9, criterion_9(&mut determinism), t);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
