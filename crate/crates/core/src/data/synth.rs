//! Synthetic problems with known structure.

use std::collections::BTreeSet;

use super::SparseMatrix;
use crate::{Error, Result, RngState};

/// `L(x) = ½ (x − c)ᵀ D (x − c)` with diagonal `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub diag: Vec<f64>,
    pub center: Vec<f64>,
}

impl Quadratic {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn loss(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .zip(&self.diag)
            .map(|((xi, ci), di)| 0.5 * di * (xi - ci).powi(2))
            .sum()
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.center)
            .zip(&self.diag)
            .map(|((xi, ci), di)| di * (xi - ci))
            .collect()
    }

    pub fn optimum(&self) -> &[f64] {
        &self.center
    }
}

/// Seeded diagonal quadratic whose curvatures are log-spaced in `[1, cond]`
/// and whose optimum is drawn uniformly from `[-0.5, 0.5)` per coordinate.
pub fn synth_quadratic(seed: u64, dim: usize, cond: f64) -> Result<Quadratic> {
    if dim == 0 || !(cond >= 1.0) || !cond.is_finite() {
        return Err(Error::Config(format!(
            "quadratic needs dim >= 1 and finite cond >= 1 (dim={dim}, cond={cond})"
        )));
    }
    let diag = (0..dim)
        .map(|i| {
            if dim == 1 {
                1.0
            } else {
                cond.powf(i as f64 / (dim - 1) as f64)
            }
        })
        .collect();
    let center = RngState::new(seed)
        .uniform(&[dim], -0.5, 0.5)?
        .into_vec();
    Ok(Quadratic { diag, center })
}

/// Value and gradient of the n-dimensional Rosenbrock function
/// `Σ 100 (x[i+1] − x[i]²)² + (1 − x[i])²`.
pub fn rosenbrock(x: &[f64]) -> (f64, Vec<f64>) {
    let mut value = 0.0;
    let mut grad = vec![0.0; x.len()];
    for i in 0..x.len().saturating_sub(1) {
        let a = x[i + 1] - x[i] * x[i];
        let b = 1.0 - x[i];
        value += 100.0 * a * a + b * b;
        grad[i] += -400.0 * x[i] * a - 2.0 * b;
        grad[i + 1] += 200.0 * a;
    }
    (value, grad)
}

/// Shape of a synthetic bag-of-words sentiment task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseTaskSpec {
    pub rows: usize,
    pub vocab: usize,
    /// Distinct words per document.
    pub words_per_row: usize,
    /// Fraction of a document's words drawn from the polar vocabulary.
    pub signal: f64,
    /// Probability that a polar word agrees with the document label.
    pub agreement: f64,
}

impl Default for SparseTaskSpec {
    fn default() -> Self {
        SparseTaskSpec {
            rows: 2000,
            vocab: 10_000,
            words_per_row: 50,
            signal: 0.3,
            agreement: 0.75,
        }
    }
}

/// Synthetic binary sentiment data over a multi-hot vocabulary.
///
/// The first tenth of the vocabulary is positive, the second tenth negative,
/// the rest neutral. Each document draws `words_per_row` distinct words:
/// a `signal` share from the polar words (matching its label with
/// probability `agreement`) and the remainder from the neutral words.
pub fn synth_sparse_binary(
    spec: &SparseTaskSpec,
    rng: &mut RngState,
) -> Result<(SparseMatrix, Vec<usize>)> {
    let polar = spec.vocab / 10;
    let neutral = spec.vocab - 2 * polar;
    if polar == 0 || spec.words_per_row == 0 || spec.words_per_row > polar.min(neutral) {
        return Err(Error::Config(format!(
            "vocabulary of {} is too small for {} words per row",
            spec.vocab, spec.words_per_row
        )));
    }
    let mut rows = Vec::with_capacity(spec.rows);
    let mut labels = Vec::with_capacity(spec.rows);
    for _ in 0..spec.rows {
        let label = usize::from(rng.next_f64() < 0.5);
        let mut words = BTreeSet::new();
        while words.len() < spec.words_per_row {
            let w = if rng.next_f64() < spec.signal {
                let positive = (rng.next_f64() < spec.agreement) == (label == 1);
                let offset = if positive { 0 } else { polar };
                offset + rng.below(polar)
            } else {
                2 * polar + rng.below(neutral)
            };
            words.insert(w);
        }
        rows.push(words.into_iter().map(|w| (w, 1.0)).collect());
        labels.push(label);
    }
    Ok((SparseMatrix::from_rows(spec.vocab, rows)?, labels))
}
