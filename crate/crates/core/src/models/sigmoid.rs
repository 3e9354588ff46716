use super::{Batch, Evaluation, Mode, Model, Params};
use crate::data::Features;
use crate::{Error, Result, RngState, Tensor};

/// Applies inverted dropout to the inputs: each stored entry is kept with
/// probability `1 − p` and rescaled by `1 / (1 − p)`.
fn drop_inputs(x: &Features, p: f64, seed: u64) -> Result<Features> {
    let keep = 1.0 - p;
    let mut rng = RngState::new(seed);
    let mut mask = |v: f64| {
        if rng.next_f64() < keep {
            v / keep
        } else {
            0.0
        }
    };
    Ok(match x {
        Features::Dense(t) => {
            let data = t.data().iter().map(|&v| mask(v)).collect();
            Features::Dense(Tensor::from_vec(t.shape(), data)?)
        }
        Features::Sparse(s) => Features::Sparse(s.map_values(|_, _, v| mask(v))?),
    })
}

fn logit_column(x: &Features, w: &Tensor, b: f64) -> Result<Vec<f64>> {
    let z = match x {
        Features::Dense(t) => {
            let wcol = w.reshape(&[w.len(), 1])?;
            t.matmul(&wcol)?.into_vec()
        }
        Features::Sparse(s) => s.dot(w.data())?,
    };
    Ok(z.into_iter().map(|v| v + b).collect())
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean binary cross-entropy of `σ(x̃·w + b)` with gradients `(loss, ∂w, ∂b)`.
///
/// In training mode with `dropout_p > 0`, `x̃` is the input after inverted
/// dropout seeded by `mode`; in evaluation mode `x̃ = x`.
pub fn sigmoid_bce(
    w: &Tensor,
    b: &Tensor,
    batch: &Batch,
    dropout_p: f64,
    mode: Mode,
) -> Result<(f64, Tensor, Tensor)> {
    if !(0.0..1.0).contains(&dropout_p) {
        return Err(Error::Config(format!(
            "dropout probability must be in [0, 1), got {dropout_p}"
        )));
    }
    if let Some(&bad) = batch.labels.iter().find(|&&y| y > 1) {
        return Err(Error::Range(format!("binary label {bad}")));
    }
    let x = match mode {
        Mode::Train { seed } if dropout_p > 0.0 => drop_inputs(&batch.x, dropout_p, seed)?,
        _ => batch.x.clone(),
    };
    let z = logit_column(&x, w, b.data()[0])?;
    let inv_b = 1.0 / batch.size() as f64;
    let mut loss = 0.0;
    let mut residual = Vec::with_capacity(z.len());
    for (&zi, &y) in z.iter().zip(&batch.labels) {
        let y = y as f64;
        // softplus(z) − y·z, written to avoid overflow.
        loss += zi.max(0.0) - y * zi + (-zi.abs()).exp().ln_1p();
        residual.push((sigmoid(zi) - y) * inv_b);
    }
    let loss = loss * inv_b;
    if !loss.is_finite() {
        return Err(Error::NonFinite("binary cross-entropy loss"));
    }
    let grad_w = match &x {
        Features::Dense(t) => t
            .t_matmul(&Tensor::from_vec(&[residual.len(), 1], residual.clone())?)?
            .reshape(&[w.len()])?,
        Features::Sparse(s) => {
            let mut g = vec![0.0; s.cols()];
            for (r, &res) in residual.iter().enumerate() {
                let (ix, vals) = s.row(r);
                for (&i, &v) in ix.iter().zip(vals) {
                    g[i] += v * res;
                }
            }
            Tensor::vector(g)?
        }
    };
    let grad_b = Tensor::scalar(residual.iter().sum())?;
    Ok((loss, grad_w, grad_b))
}

/// Binary logistic regression with input dropout, parameters `w: [d]` and
/// `b: [1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmoidRegression {
    pub inputs: usize,
    pub dropout_p: f64,
}

impl SigmoidRegression {
    pub fn new(inputs: usize, dropout_p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&dropout_p) {
            return Err(Error::Config(format!(
                "dropout probability must be in [0, 1), got {dropout_p}"
            )));
        }
        Ok(SigmoidRegression { inputs, dropout_p })
    }
}

impl Model for SigmoidRegression {
    fn name(&self) -> &'static str {
        "sigmoid-regression"
    }

    fn init(&self, rng: &mut RngState) -> Result<Params> {
        Ok(Params::new(vec![
            ("w", rng.uniform(&[self.inputs], -0.05, 0.05)?),
            ("b", Tensor::zeros(&[1])?),
        ]))
    }

    fn eval(&self, params: &Params, batch: &Batch, mode: Mode) -> Result<Evaluation> {
        params.expect(&["w", "b"])?;
        let t = params.tensors();
        let (loss, gw, gb) = sigmoid_bce(&t[0], &t[1], batch, self.dropout_p, mode)?;
        Ok(Evaluation {
            loss,
            grads: vec![gw, gb],
        })
    }

    /// Two-column scores `[0, z]`, so the argmax predicts class 1 only when
    /// `z > 0`.
    fn logits(&self, params: &Params, batch: &Batch) -> Result<Tensor> {
        let t = params.tensors();
        let z = logit_column(&batch.x, &t[0], t[1].data()[0])?;
        let data = z.iter().flat_map(|&v| [0.0, v]).collect();
        Tensor::from_vec(&[z.len(), 2], data)
    }
}
