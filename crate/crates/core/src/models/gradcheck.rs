//! Central finite-difference gradient checks.

use super::{Batch, Mode, Model, Params};
use crate::{Error, Result, RngState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    /// Largest `|analytic − numeric| / max(1e-12, |analytic| + |numeric|)`.
    pub max_rel_err: f64,
    pub checked: usize,
    /// Coordinates skipped because the perturbation crossed a kink.
    pub excluded: usize,
}

/// Options for a finite-difference check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub eps: f64,
    /// Check at most this many randomly chosen coordinates per parameter.
    pub max_per_param: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheck {
    fn default() -> Self {
        GradCheck {
            eps: 1e-6,
            max_per_param: None,
            seed: 0,
        }
    }
}

impl GradCheck {
    pub fn new(eps: f64) -> Self {
        GradCheck {
            eps,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(1e-7..=1e-4).contains(&self.eps) {
            return Err(Error::Config(format!(
                "finite-difference step must be in [1e-7, 1e-4], got {}",
                self.eps
            )));
        }
        Ok(())
    }

    /// Checks every parameter, sampling coordinates if `max_per_param` is set.
    pub fn run(
        &self,
        model: &dyn Model,
        params: &Params,
        batch: &Batch,
        mode: Mode,
    ) -> Result<GradCheckReport> {
        let mut rng = RngState::new(self.seed);
        let mut coords = Vec::new();
        for (pi, t) in params.tensors().iter().enumerate() {
            let mut idx: Vec<usize> = (0..t.len()).collect();
            if let Some(k) = self.max_per_param {
                if k < idx.len() {
                    rng.shuffle(&mut idx);
                    idx.truncate(k);
                    idx.sort_unstable();
                }
            }
            coords.extend(idx.into_iter().map(|i| (pi, i)));
        }
        self.run_on(model, params, batch, mode, &coords)
    }

    /// Checks the listed `(parameter index, element index)` coordinates.
    pub fn run_on(
        &self,
        model: &dyn Model,
        params: &Params,
        batch: &Batch,
        mode: Mode,
        coords: &[(usize, usize)],
    ) -> Result<GradCheckReport> {
        self.validate()?;
        let analytic = model.eval(params, batch, mode)?.grads;
        let pattern = model.activation_pattern(params, batch)?;
        let mut probe = params.clone();
        let mut report = GradCheckReport {
            max_rel_err: 0.0,
            checked: 0,
            excluded: 0,
        };
        for &(pi, i) in coords {
            let t = params
                .tensors()
                .get(pi)
                .ok_or_else(|| Error::Range(format!("parameter {pi}")))?;
            let orig = *t
                .data()
                .get(i)
                .ok_or_else(|| Error::Range(format!("element {i} of parameter {pi}")))?;

            let mut eval_at = |v: f64| -> Result<(f64, bool)> {
                probe.tensors_mut()[pi].data_mut()[i] = v;
                let loss = model.loss(&probe, batch, mode)?;
                let same = pattern.is_empty() || model.activation_pattern(&probe, batch)? == pattern;
                Ok((loss, same))
            };
            let (plus, same_plus) = eval_at(orig + self.eps)?;
            let (minus, same_minus) = eval_at(orig - self.eps)?;
            probe.tensors_mut()[pi].data_mut()[i] = orig;

            if !(same_plus && same_minus) {
                report.excluded += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * self.eps);
            let a = analytic[pi].data()[i];
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-12);
            report.max_rel_err = report.max_rel_err.max(rel);
            report.checked += 1;
        }
        Ok(report)
    }
}

/// Max relative error over every coordinate of every parameter.
pub fn finite_diff_check(
    model: &dyn Model,
    params: &Params,
    batch: &Batch,
    eps: f64,
) -> Result<f64> {
    GradCheck::new(eps)
        .run(model, params, batch, Mode::Eval)
        .map(|r| r.max_rel_err)
}
