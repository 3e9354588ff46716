use bigrad::bsg::{bsg_init, bsg_step_traced, BsgConfig, BsgState, StepRecord};
use bigrad::optim::{InnerHyper, InnerState};
use bigrad::Tensor;

use crate::Result;

/// Optimizer state for a list of parameter tensors.
///
/// BSG wraps the inner method's step `u`; the plain variant applies
/// `w ← w − u` directly. Both consume the same gradients in the same order.
#[derive(Debug, Clone)]
pub enum ParamOptimizer {
    Bsg {
        states: Vec<BsgState>,
        hyper: InnerHyper,
    },
    Plain {
        states: Vec<InnerState>,
        hyper: InnerHyper,
    },
}

impl ParamOptimizer {
    pub fn bsg(params: &[Tensor], cfg: &BsgConfig, hyper: InnerHyper) -> Result<Self> {
        hyper.validate()?;
        let states = params
            .iter()
            .map(|p| bsg_init(p.shape(), cfg))
            .collect::<bigrad::Result<_>>()?;
        Ok(ParamOptimizer::Bsg { states, hyper })
    }

    pub fn plain(params: &[Tensor], hyper: InnerHyper) -> Result<Self> {
        hyper.validate()?;
        let states = params
            .iter()
            .map(|p| InnerState::new(hyper.kind, p.shape()))
            .collect::<bigrad::Result<_>>()?;
        Ok(ParamOptimizer::Plain { states, hyper })
    }

    /// Updates `params` in place and returns the largest `|u|` of the step.
    pub fn step(&mut self, params: &mut [Tensor], grads: &[Tensor]) -> Result<f64> {
        self.step_traced(params, grads).map(|(max_u, _)| max_u)
    }

    /// Like [`step`](Self::step), also returning BSG's per-tensor records
    /// (empty for the plain variant).
    pub fn step_traced(
        &mut self,
        params: &mut [Tensor],
        grads: &[Tensor],
    ) -> Result<(f64, Vec<StepRecord>)> {
        if params.len() != grads.len() || params.len() != self.len() {
            return Err(crate::BenchError::Config(format!(
                "{} parameters, {} gradients, {} optimizer states",
                params.len(),
                grads.len(),
                self.len()
            )));
        }
        let mut max_u = 0.0f64;
        let mut records = Vec::new();
        match self {
            ParamOptimizer::Bsg { states, hyper } => {
                for ((w, g), s) in params.iter_mut().zip(grads).zip(states) {
                    let rec = bsg_step_traced(w, g, s, hyper)?;
                    max_u = max_u.max(rec.u.max_abs());
                    *w = rec.x_next.clone();
                    records.push(rec);
                }
            }
            ParamOptimizer::Plain { states, hyper } => {
                for ((w, g), s) in params.iter_mut().zip(grads).zip(states) {
                    let u = s.update(g, hyper)?;
                    max_u = max_u.max(u.max_abs());
                    *w = w.sub(&u)?;
                }
            }
        }
        Ok((max_u, records))
    }

    pub fn len(&self) -> usize {
        match self {
            ParamOptimizer::Bsg { states, .. } => states.len(),
            ParamOptimizer::Plain { states, .. } => states.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Resets that left `n >= p`, summed over all parameters.
    pub fn inverted_resets(&self) -> u64 {
        match self {
            ParamOptimizer::Bsg { states, .. } => states.iter().map(|s| s.inverted_resets).sum(),
            ParamOptimizer::Plain { .. } => 0,
        }
    }
}
