//! Models with hand-derived gradients.
//!
//! A [`Model`] maps `(params, batch)` to a mean loss and one gradient tensor
//! per parameter, in the same order as [`Params`].

mod gradcheck;
mod mlp;
mod sigmoid;
mod softmax;

pub use gradcheck::{finite_diff_check, GradCheck, GradCheckReport};
pub use mlp::{mlp_eval, Mlp};
pub use sigmoid::{sigmoid_bce, SigmoidRegression};
pub use softmax::{softmax_xent, SoftmaxRegression};

use crate::data::{Dataset, Features};
use crate::{Error, Result, RngState, Tensor};

/// Named parameter tensors in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl Params {
    pub fn new(entries: Vec<(&str, Tensor)>) -> Self {
        let (names, tensors) = entries
            .into_iter()
            .map(|(n, t)| (n.to_string(), t))
            .unzip();
        Params { names, tensors }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.tensors[i])
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn numel(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub(crate) fn expect(&self, names: &[&str]) -> Result<()> {
        if self.names.len() != names.len() || self.names.iter().zip(names).any(|(a, b)| a != b) {
            return Err(Error::Config(format!(
                "expected parameters {names:?}, got {:?}",
                self.names
            )));
        }
        Ok(())
    }
}

/// Inputs and integer labels for one evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub x: Features,
    pub labels: Vec<usize>,
}

impl Batch {
    pub fn new(x: Features, labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() || x.rows() != labels.len() {
            return Err(Error::Length(format!(
                "batch has {} rows and {} labels",
                x.rows(),
                labels.len()
            )));
        }
        Ok(Batch { x, labels })
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }
}

impl TryFrom<Dataset> for Batch {
    type Error = Error;

    fn try_from(d: Dataset) -> Result<Self> {
        Batch::new(d.x, d.labels)
    }
}

/// Training mode seeds any stochastic regularisation; evaluation is
/// deterministic and unregularised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train { seed: u64 },
    Eval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub grads: Vec<Tensor>,
}

pub trait Model: Sync {
    fn name(&self) -> &'static str;

    /// Fresh parameters drawn from `rng`.
    fn init(&self, rng: &mut RngState) -> Result<Params>;

    /// Mean loss over the batch and its gradient.
    fn eval(&self, params: &Params, batch: &Batch, mode: Mode) -> Result<Evaluation>;

    fn loss(&self, params: &Params, batch: &Batch, mode: Mode) -> Result<f64> {
        self.eval(params, batch, mode).map(|e| e.loss)
    }

    /// Class scores `[B×C]` in evaluation mode; the predicted class is the
    /// row argmax.
    fn logits(&self, params: &Params, batch: &Batch) -> Result<Tensor>;

    /// Signs of every piecewise-linear pre-activation, for models with kinks.
    /// Finite-difference checks skip coordinates whose perturbation changes
    /// this pattern.
    fn activation_pattern(&self, _params: &Params, _batch: &Batch) -> Result<Vec<i8>> {
        Ok(Vec::new())
    }
}

/// Fraction of rows whose argmax (lowest index on ties) equals the label.
pub fn accuracy(logits: &Tensor, labels: &[usize]) -> Result<f64> {
    let [rows, cols] = logits.shape() else {
        return Err(Error::Config(format!(
            "logits must be a matrix, got {:?}",
            logits.shape()
        )));
    };
    if *rows != labels.len() {
        return Err(Error::ShapeMismatch {
            left: logits.shape().to_vec(),
            right: vec![labels.len()],
        });
    }
    let mut hits = 0usize;
    for (r, &label) in labels.iter().enumerate() {
        let row = logits.row(r);
        let mut best = 0;
        for c in 1..*cols {
            if row[c] > row[best] {
                best = c;
            }
        }
        hits += usize::from(best == label);
    }
    Ok(hits as f64 / labels.len() as f64)
}

/// Mean loss and accuracy over a whole dataset in evaluation mode, computed
/// in chunks of `chunk` rows and combined in a fixed order.
pub fn evaluate(model: &dyn Model, params: &Params, data: &Dataset, chunk: usize) -> Result<(f64, f64)> {
    let chunk = chunk.max(1);
    let mut loss_sum = 0.0;
    let mut hits = 0.0;
    let idx: Vec<usize> = (0..data.len()).collect();
    for part in idx.chunks(chunk) {
        let batch = Batch::try_from(data.subset(part)?)?;
        let b = batch.size() as f64;
        loss_sum += model.loss(params, &batch, Mode::Eval)? * b;
        hits += accuracy(&model.logits(params, &batch)?, &batch.labels)? * b;
    }
    let n = data.len() as f64;
    Ok((loss_sum / n, hits / n))
}

/// `X · W` for dense or sparse inputs.
pub(crate) fn features_matmul(x: &Features, w: &Tensor) -> Result<Tensor> {
    match x {
        Features::Dense(t) => t.matmul(w),
        Features::Sparse(s) => s.matmul(w),
    }
}

/// `Xᵀ · R` for dense or sparse inputs.
pub(crate) fn features_t_matmul(x: &Features, r: &Tensor) -> Result<Tensor> {
    match x {
        Features::Dense(t) => t.t_matmul(r),
        Features::Sparse(s) => {
            let k = r.len() / r.rows();
            let mut out = vec![0.0; s.cols() * k];
            for row in 0..s.rows() {
                let (ix, vals) = s.row(row);
                let src = r.row(row);
                for (&i, &v) in ix.iter().zip(vals) {
                    for (o, &rv) in out[i * k..(i + 1) * k].iter_mut().zip(src) {
                        *o += v * rv;
                    }
                }
            }
            Tensor::from_vec(&[s.cols(), k], out)
        }
    }
}

/// Mean softmax cross-entropy of `logits` and the residual
/// `(softmax − onehot) / B`, using max-subtraction for stability.
pub(crate) fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    let [rows, cols] = logits.shape() else {
        return Err(Error::Config("logits must be a matrix".into()));
    };
    let (rows, cols) = (*rows, *cols);
    if labels.len() != rows {
        return Err(Error::ShapeMismatch {
            left: logits.shape().to_vec(),
            right: vec![labels.len()],
        });
    }
    let inv_b = 1.0 / rows as f64;
    let mut loss = 0.0;
    let mut residual = vec![0.0; rows * cols];
    for (r, &label) in labels.iter().enumerate() {
        if label >= cols {
            return Err(Error::Range(format!("label {label} with {cols} classes")));
        }
        let z = logits.row(r);
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = z.iter().map(|v| (v - max).exp()).sum();
        let log_denom = denom.ln();
        loss -= z[label] - max - log_denom;
        let dst = &mut residual[r * cols..(r + 1) * cols];
        for (c, d) in dst.iter_mut().enumerate() {
            let prob = (z[c] - max).exp() / denom;
            let target = if c == label { 1.0 } else { 0.0 };
            *d = (prob - target) * inv_b;
        }
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite("cross-entropy loss"));
    }
    Ok((loss * inv_b, Tensor::from_vec(&[rows, cols], residual)?))
}
