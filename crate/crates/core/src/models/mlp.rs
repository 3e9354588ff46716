use super::{features_matmul, features_t_matmul, softmax_cross_entropy, Batch, Evaluation, Mode, Model, Params};
use crate::{Result, RngState, Tensor};

const NAMES: [&str; 6] = ["w1", "b1", "w2", "b2", "w3", "b3"];

/// Two-hidden-layer ReLU network with a softmax cross-entropy head.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mlp {
    pub inputs: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub classes: usize,
}

impl Mlp {
    pub fn new(inputs: usize, hidden1: usize, hidden2: usize, classes: usize) -> Self {
        Mlp {
            inputs,
            hidden1,
            hidden2,
            classes,
        }
    }

    /// 784 → 500 → 300 → 10.
    pub fn mnist() -> Self {
        Self::new(784, 500, 300, 10)
    }
}

struct Forward {
    pre1: Tensor,
    act1: Tensor,
    pre2: Tensor,
    act2: Tensor,
    logits: Tensor,
}

fn relu(t: &Tensor) -> Result<Tensor> {
    t.map(|v| if v > 0.0 { v } else { 0.0 })
}

fn forward(p: &[Tensor], batch: &Batch) -> Result<Forward> {
    let pre1 = features_matmul(&batch.x, &p[0])?.add_row_vector(&p[1])?;
    let act1 = relu(&pre1)?;
    let pre2 = act1.matmul(&p[2])?.add_row_vector(&p[3])?;
    let act2 = relu(&pre2)?;
    let logits = act2.matmul(&p[4])?.add_row_vector(&p[5])?;
    Ok(Forward {
        pre1,
        act1,
        pre2,
        act2,
        logits,
    })
}

/// Gradient through a ReLU; the subgradient at 0 is 0.
fn relu_back(upstream: &Tensor, pre: &Tensor) -> Result<Tensor> {
    upstream.zip_map(pre, |g, z| if z > 0.0 { g } else { 0.0 })
}

/// Loss and gradients of the MLP in `w1, b1, w2, b2, w3, b3` order.
pub fn mlp_eval(params: &Params, batch: &Batch) -> Result<(f64, Vec<Tensor>)> {
    params.expect(&NAMES)?;
    let p = params.tensors();
    let f = forward(p, batch)?;
    let (loss, d_logits) = softmax_cross_entropy(&f.logits, &batch.labels)?;

    let g_w3 = f.act2.t_matmul(&d_logits)?;
    let g_b3 = d_logits.sum_rows()?;
    let d_pre2 = relu_back(&d_logits.matmul_t(&p[4])?, &f.pre2)?;
    let g_w2 = f.act1.t_matmul(&d_pre2)?;
    let g_b2 = d_pre2.sum_rows()?;
    let d_pre1 = relu_back(&d_pre2.matmul_t(&p[2])?, &f.pre1)?;
    let g_w1 = features_t_matmul(&batch.x, &d_pre1)?;
    let g_b1 = d_pre1.sum_rows()?;
    Ok((loss, vec![g_w1, g_b1, g_w2, g_b2, g_w3, g_b3]))
}

impl Model for Mlp {
    fn name(&self) -> &'static str {
        "mlp"
    }

    fn init(&self, rng: &mut RngState) -> Result<Params> {
        Ok(Params::new(vec![
            ("w1", rng.uniform(&[self.inputs, self.hidden1], -0.05, 0.05)?),
            ("b1", Tensor::zeros(&[self.hidden1])?),
            ("w2", rng.uniform(&[self.hidden1, self.hidden2], -0.05, 0.05)?),
            ("b2", Tensor::zeros(&[self.hidden2])?),
            ("w3", rng.uniform(&[self.hidden2, self.classes], -0.05, 0.05)?),
            ("b3", Tensor::zeros(&[self.classes])?),
        ]))
    }

    fn eval(&self, params: &Params, batch: &Batch, _mode: Mode) -> Result<Evaluation> {
        let (loss, grads) = mlp_eval(params, batch)?;
        Ok(Evaluation { loss, grads })
    }

    fn loss(&self, params: &Params, batch: &Batch, _mode: Mode) -> Result<f64> {
        params.expect(&NAMES)?;
        let f = forward(params.tensors(), batch)?;
        softmax_cross_entropy(&f.logits, &batch.labels).map(|(l, _)| l)
    }

    fn logits(&self, params: &Params, batch: &Batch) -> Result<Tensor> {
        params.expect(&NAMES)?;
        Ok(forward(params.tensors(), batch)?.logits)
    }

    fn activation_pattern(&self, params: &Params, batch: &Batch) -> Result<Vec<i8>> {
        params.expect(&NAMES)?;
        let f = forward(params.tensors(), batch)?;
        let sign = |v: &f64| v.partial_cmp(&0.0).map_or(0, |o| o as i8);
        Ok(f.pre1.data().iter().chain(f.pre2.data()).map(sign).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Features;

    fn batch(rng: &mut RngState, b: usize, d: usize, c: usize) -> Batch {
        let x = rng.uniform(&[b, d], -1.0, 1.0).unwrap();
        Batch::new(Features::Dense(x), (0..b).map(|i| i % c).collect()).unwrap()
    }

    #[test]
    fn zero_weights() {
        let m = Mlp::new(6, 5, 3, 10);
        let params = Params::new(
            NAMES
                .iter()
                .zip([[6, 5], [5, 0], [5, 3], [3, 0], [3, 10], [10, 0]])
                .map(|(n, s)| {
                    let shape: Vec<usize> = s.iter().copied().filter(|&v| v > 0).collect();
                    (*n, Tensor::zeros(&shape).unwrap())
                })
                .collect(),
        );
        let b = batch(&mut RngState::new(1), 4, 6, 10);
        let e = m.eval(&params, &b, Mode::Eval).unwrap();
        assert!((e.loss - 10f64.ln()).abs() < 1e-12);
        assert!(e.grads[2].data().iter().all(|&g| g == 0.0));
        assert!(e.grads[4].data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn hidden_unit_permutation_keeps_loss() {
        let m = Mlp::new(6, 5, 3, 2);
        let mut rng = RngState::new(8);
        let params = m.init(&mut rng).unwrap();
        let b = batch(&mut rng, 3, 6, 2);
        let base = m.loss(&params, &b, Mode::Eval).unwrap();

        // Swap hidden units 1 and 3 of layer 1: columns of w1, entries of b1,
        // rows of w2.
        let mut t = params.tensors().to_vec();
        let (i, j) = (1, 3);
        for r in 0..6 {
            t[0].data_mut().swap(r * 5 + i, r * 5 + j);
        }
        t[1].data_mut().swap(i, j);
        for c in 0..3 {
            t[2].data_mut().swap(i * 3 + c, j * 3 + c);
        }
        let swapped = Params::new(NAMES.iter().copied().zip(t).collect());
        let loss = m.loss(&swapped, &b, Mode::Eval).unwrap();
        assert!((loss - base).abs() < 1e-14);
    }

    #[test]
    fn mnist_shapes() {
        let m = Mlp::mnist();
        let params = m.init(&mut RngState::new(0)).unwrap();
        let shapes: Vec<&[usize]> = params.tensors().iter().map(Tensor::shape).collect();
        assert_eq!(
            shapes,
            vec![&[784, 500][..], &[500], &[500, 300], &[300], &[300, 10], &[10]]
        );
    }
}
