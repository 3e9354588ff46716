use super::{features_matmul, features_t_matmul, softmax_cross_entropy, Batch, Evaluation, Mode, Model, Params};
use crate::{Result, RngState, Tensor};

/// Mean softmax cross-entropy of `XW + b` and its gradients `(loss, ∂W, ∂b)`.
pub fn softmax_xent(w: &Tensor, b: &Tensor, batch: &Batch) -> Result<(f64, Tensor, Tensor)> {
    let logits = features_matmul(&batch.x, w)?.add_row_vector(b)?;
    let (loss, residual) = softmax_cross_entropy(&logits, &batch.labels)?;
    let grad_w = features_t_matmul(&batch.x, &residual)?;
    let grad_b = residual.sum_rows()?;
    Ok((loss, grad_w, grad_b))
}

/// Multinomial logistic regression, parameters `w: [d×C]` and `b: [C]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SoftmaxRegression {
    pub inputs: usize,
    pub classes: usize,
}

impl SoftmaxRegression {
    pub fn new(inputs: usize, classes: usize) -> Self {
        SoftmaxRegression { inputs, classes }
    }
}

impl Model for SoftmaxRegression {
    fn name(&self) -> &'static str {
        "softmax-regression"
    }

    fn init(&self, rng: &mut RngState) -> Result<Params> {
        Ok(Params::new(vec![
            ("w", rng.uniform(&[self.inputs, self.classes], -0.05, 0.05)?),
            ("b", Tensor::zeros(&[self.classes])?),
        ]))
    }

    fn eval(&self, params: &Params, batch: &Batch, _mode: Mode) -> Result<Evaluation> {
        params.expect(&["w", "b"])?;
        let t = params.tensors();
        let (loss, gw, gb) = softmax_xent(&t[0], &t[1], batch)?;
        Ok(Evaluation {
            loss,
            grads: vec![gw, gb],
        })
    }

    fn loss(&self, params: &Params, batch: &Batch, _mode: Mode) -> Result<f64> {
        params.expect(&["w", "b"])?;
        let logits = self.logits(params, batch)?;
        softmax_cross_entropy(&logits, &batch.labels).map(|(l, _)| l)
    }

    fn logits(&self, params: &Params, batch: &Batch) -> Result<Tensor> {
        let t = params.tensors();
        features_matmul(&batch.x, &t[0])?.add_row_vector(&t[1])
    }
}
