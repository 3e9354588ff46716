//! First-order inner optimizers.
//!
//! Each optimizer turns a gradient into an update value `u` with the
//! convention `w_next = w - u`. Nothing here writes parameters: BSG consumes
//! `u` to move its search interval, and the plain baselines subtract it.

use crate::{Error, Result, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InnerKind {
    Adam,
    Sgd,
    Momentum,
    RmsProp,
}

impl InnerKind {
    pub fn name(self) -> &'static str {
        match self {
            InnerKind::Adam => "adam",
            InnerKind::Sgd => "sgd",
            InnerKind::Momentum => "momentum",
            InnerKind::RmsProp => "rmsprop",
        }
    }
}

impl std::str::FromStr for InnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adam" => Ok(InnerKind::Adam),
            "sgd" => Ok(InnerKind::Sgd),
            "momentum" => Ok(InnerKind::Momentum),
            "rmsprop" => Ok(InnerKind::RmsProp),
            other => Err(Error::Config(format!("unknown inner optimizer {other:?}"))),
        }
    }
}

/// Hyperparameters shared by all inner optimizers. Each kind reads only the
/// fields it needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerHyper {
    pub kind: InnerKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub momentum_coef: f64,
    /// RMSProp squared-gradient decay.
    pub decay: f64,
}

impl Default for InnerHyper {
    fn default() -> Self {
        InnerHyper {
            kind: InnerKind::Adam,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            momentum_coef: 0.9,
            decay: 0.9,
        }
    }
}

impl InnerHyper {
    pub fn with_kind(kind: InnerKind) -> Self {
        InnerHyper {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be in [0, 1), got {v}")))
            }
        };
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be > 0, got {}", self.lr)));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Config(format!("eps must be > 0, got {}", self.eps)));
        }
        unit("beta1", self.beta1)?;
        unit("beta2", self.beta2)?;
        unit("momentum_coef", self.momentum_coef)?;
        unit("decay", self.decay)
    }
}

fn check_grad(state_shape: &[usize], g: &Tensor) -> Result<()> {
    if state_shape != g.shape() {
        return Err(Error::ShapeMismatch {
            left: state_shape.to_vec(),
            right: g.shape().to_vec(),
        });
    }
    g.validate().map_err(|_| Error::NonFinite("gradient"))
}

/// Adam moment estimates for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Tensor,
    pub v: Tensor,
    pub t: u64,
}

impl AdamState {
    pub fn new(shape: &[usize]) -> Result<Self> {
        Ok(AdamState {
            m: Tensor::zeros(shape)?,
            v: Tensor::zeros(shape)?,
            t: 0,
        })
    }

    /// Advances the moments with `g` and returns the bias-corrected update
    /// `lr · m̂ / (√v̂ + ε)`.
    pub fn update(&mut self, g: &Tensor, h: &InnerHyper) -> Result<Tensor> {
        check_grad(self.m.shape(), g)?;
        self.t += 1;
        let t = i32::try_from(self.t).unwrap_or(i32::MAX);
        let bc1 = 1.0 - h.beta1.powi(t);
        let bc2 = 1.0 - h.beta2.powi(t);
        let mut u = vec![0.0; g.len()];
        let m = self.m.data_mut();
        let v = self.v.data_mut();
        for (((ui, &gi), mi), vi) in u.iter_mut().zip(g.data()).zip(m).zip(v) {
            *mi = h.beta1 * *mi + (1.0 - h.beta1) * gi;
            *vi = h.beta2 * *vi + (1.0 - h.beta2) * gi * gi;
            let m_hat = *mi / bc1;
            let v_hat = *vi / bc2;
            *ui = h.lr * m_hat / (v_hat.sqrt() + h.eps);
        }
        Tensor::from_vec(g.shape(), u)
    }
}

/// State for the non-adaptive baselines and RMSProp.
#[derive(Debug, Clone, PartialEq)]
pub enum BaselineState {
    Sgd { shape: Vec<usize> },
    Momentum { velocity: Tensor },
    RmsProp { sq_avg: Tensor },
}

impl BaselineState {
    pub fn new(kind: InnerKind, shape: &[usize]) -> Result<Self> {
        match kind {
            InnerKind::Sgd => {
                Tensor::zeros(shape)?;
                Ok(BaselineState::Sgd {
                    shape: shape.to_vec(),
                })
            }
            InnerKind::Momentum => Ok(BaselineState::Momentum {
                velocity: Tensor::zeros(shape)?,
            }),
            InnerKind::RmsProp => Ok(BaselineState::RmsProp {
                sq_avg: Tensor::zeros(shape)?,
            }),
            InnerKind::Adam => Err(Error::Config(
                "adam is not a baseline kind; use AdamState".into(),
            )),
        }
    }

    pub fn kind(&self) -> InnerKind {
        match self {
            BaselineState::Sgd { .. } => InnerKind::Sgd,
            BaselineState::Momentum { .. } => InnerKind::Momentum,
            BaselineState::RmsProp { .. } => InnerKind::RmsProp,
        }
    }

    fn shape(&self) -> &[usize] {
        match self {
            BaselineState::Sgd { shape } => shape,
            BaselineState::Momentum { velocity } => velocity.shape(),
            BaselineState::RmsProp { sq_avg } => sq_avg.shape(),
        }
    }
}

/// SGD, heavy-ball momentum or RMSProp update, selected by `h.kind`.
pub fn baseline_update(state: &mut BaselineState, g: &Tensor, h: &InnerHyper) -> Result<Tensor> {
    if h.kind != state.kind() {
        return Err(Error::Config(format!(
            "hyperparameters are for {}, state is {}",
            h.kind.name(),
            state.kind().name()
        )));
    }
    check_grad(state.shape(), g)?;
    match state {
        BaselineState::Sgd { .. } => g.scale(h.lr),
        BaselineState::Momentum { velocity } => {
            for (vel, &gi) in velocity.data_mut().iter_mut().zip(g.data()) {
                *vel = h.momentum_coef * *vel + gi;
            }
            velocity.validate()?;
            velocity.scale(h.lr)
        }
        BaselineState::RmsProp { sq_avg } => {
            let mut u = vec![0.0; g.len()];
            for ((ui, &gi), s) in u.iter_mut().zip(g.data()).zip(sq_avg.data_mut()) {
                *s = h.decay * *s + (1.0 - h.decay) * gi * gi;
                *ui = h.lr * gi / (s.sqrt() + h.eps);
            }
            Tensor::from_vec(g.shape(), u)
        }
    }
}

/// Inner optimizer state for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub enum InnerState {
    Adam(AdamState),
    Baseline(BaselineState),
}

impl InnerState {
    pub fn new(kind: InnerKind, shape: &[usize]) -> Result<Self> {
        match kind {
            InnerKind::Adam => Ok(InnerState::Adam(AdamState::new(shape)?)),
            other => Ok(InnerState::Baseline(BaselineState::new(other, shape)?)),
        }
    }

    pub fn kind(&self) -> InnerKind {
        match self {
            InnerState::Adam(_) => InnerKind::Adam,
            InnerState::Baseline(b) => b.kind(),
        }
    }

    /// Computes `u` for gradient `g`, advancing the state by one step.
    pub fn update(&mut self, g: &Tensor, h: &InnerHyper) -> Result<Tensor> {
        match self {
            InnerState::Adam(s) => {
                if h.kind != InnerKind::Adam {
                    return Err(Error::Config(format!(
                        "hyperparameters are for {}, state is adam",
                        h.kind.name()
                    )));
                }
                s.update(g, h)
            }
            InnerState::Baseline(s) => baseline_update(s, g, h),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(v: &[f64]) -> Tensor {
        Tensor::vector(v.to_vec()).unwrap()
    }

    #[test]
    fn defaults() {
        let h = InnerHyper::default();
        assert_eq!(
            (h.lr, h.beta1, h.beta2, h.eps, h.momentum_coef, h.decay),
            (1e-3, 0.9, 0.999, 1e-8, 0.9, 0.9)
        );
        h.validate().unwrap();
    }

    #[test]
    fn adam_first_step_is_lr_times_sign() {
        let h = InnerHyper::default();
        let mut s = AdamState::new(&[1]).unwrap();
        let u = s.update(&t(&[2.0]), &h).unwrap();
        assert!((u.data()[0] - 1e-3 * 2.0 / (2.0 + 1e-8)).abs() < 1e-15);
        assert_eq!(s.t, 1);
        let mut s = AdamState::new(&[1]).unwrap();
        let u = s.update(&t(&[-5.0]), &h).unwrap();
        assert!((u.data()[0] + 1e-3).abs() < 1e-11);
    }

    #[test]
    fn adam_matches_scalar_loop() {
        // Reference: textbook Adam on one scalar, written out longhand.
        let (lr, b1, b2, eps) = (1e-3f64, 0.9f64, 0.999f64, 1e-8f64);
        let (mut m, mut v) = (0.0f64, 0.0f64);
        let mut expected = Vec::new();
        for step in 1..=10 {
            let g = 1.0;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powf(step as f64));
            let vh = v / (1.0 - b2.powf(step as f64));
            expected.push(lr * mh / (vh.sqrt() + eps));
        }
        let h = InnerHyper::default();
        let mut s = AdamState::new(&[1]).unwrap();
        for want in expected {
            let u = s.update(&t(&[1.0]), &h).unwrap().data()[0];
            assert!((u - want).abs() < 1e-12, "{u} vs {want}");
        }
        assert_eq!(s.t, 10);
    }

    #[test]
    fn adam_zero_gradient_gives_exact_zero() {
        let mut s = AdamState::new(&[3]).unwrap();
        let u = s
            .update(&t(&[0.0, 0.0, 0.0]), &InnerHyper::default())
            .unwrap();
        assert_eq!(u.data(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn adam_rejects_bad_gradients() {
        let h = InnerHyper::default();
        let mut s = AdamState::new(&[2]).unwrap();
        assert!(matches!(
            s.update(&t(&[1.0]), &h),
            Err(Error::ShapeMismatch { .. })
        ));
        let mut bad = t(&[1.0, 1.0]);
        bad.data_mut()[1] = f64::NAN;
        assert!(matches!(s.update(&bad, &h), Err(Error::NonFinite(_))));
        assert_eq!(s.t, 0);
    }

    #[test]
    fn sgd_scales_gradient() {
        let h = InnerHyper {
            lr: 0.1,
            ..InnerHyper::with_kind(InnerKind::Sgd)
        };
        let mut s = BaselineState::new(InnerKind::Sgd, &[1]).unwrap();
        let u = baseline_update(&mut s, &t(&[3.0]), &h).unwrap();
        assert!((u.data()[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn momentum_accumulates() {
        let h = InnerHyper {
            lr: 1.0,
            ..InnerHyper::with_kind(InnerKind::Momentum)
        };
        let mut s = BaselineState::new(InnerKind::Momentum, &[1]).unwrap();
        assert_eq!(baseline_update(&mut s, &t(&[1.0]), &h).unwrap().data(), &[1.0]);
        assert_eq!(baseline_update(&mut s, &t(&[1.0]), &h).unwrap().data(), &[1.9]);
    }

    #[test]
    fn rmsprop_approaches_normalised_limit() {
        // s_t = 1 - decay^t for constant g = 1, so u_t -> lr / (1 + eps).
        let h = InnerHyper::with_kind(InnerKind::RmsProp);
        let mut s = BaselineState::new(InnerKind::RmsProp, &[1]).unwrap();
        let g = 0.7;
        let mut u = 0.0;
        for _ in 0..50 {
            u = baseline_update(&mut s, &t(&[g]), &h).unwrap().data()[0];
        }
        let limit = h.lr * g / (g.abs() + h.eps);
        assert!((u - limit).abs() / limit < 0.01);
        let s_50 = g * g * (1.0 - h.decay.powi(50));
        assert!((u - h.lr * g / (s_50.sqrt() + h.eps)).abs() < 1e-15);
    }

    #[test]
    fn baseline_kind_mismatch_is_an_error() {
        assert!(BaselineState::new(InnerKind::Adam, &[1]).is_err());
        let mut s = BaselineState::new(InnerKind::Sgd, &[1]).unwrap();
        let h = InnerHyper::default();
        assert!(matches!(
            baseline_update(&mut s, &t(&[1.0]), &h),
            Err(Error::Config(_))
        ));
        assert!("nesterov".parse::<InnerKind>().is_err());
    }

    proptest! {
        #[test]
        fn fresh_state_update_carries_gradient_sign(
            g in prop::collection::vec(-10.0f64..10.0, 1..16),
            kind in prop::sample::select(vec![InnerKind::Adam, InnerKind::Sgd, InnerKind::RmsProp]),
        ) {
            let h = InnerHyper::with_kind(kind);
            let mut s = InnerState::new(kind, &[g.len()]).unwrap();
            let u = s.update(&Tensor::vector(g.clone()).unwrap(), &h).unwrap();
            for (&ui, &gi) in u.data().iter().zip(&g) {
                if gi == 0.0 {
                    prop_assert_eq!(ui, 0.0);
                } else {
                    prop_assert_eq!(ui.signum(), gi.signum());
                }
            }
        }

        #[test]
        fn updates_are_elementwise(
            steps in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 6), 1..6),
            perm in Just((0..6usize).collect::<Vec<_>>()).prop_shuffle(),
            kind in prop::sample::select(vec![InnerKind::Adam, InnerKind::Sgd, InnerKind::Momentum, InnerKind::RmsProp]),
        ) {
            let h = InnerHyper::with_kind(kind);
            let mut plain = InnerState::new(kind, &[6]).unwrap();
            let mut permuted = InnerState::new(kind, &[6]).unwrap();
            for g in &steps {
                let pg: Vec<f64> = perm.iter().map(|&i| g[i]).collect();
                let u = plain.update(&Tensor::vector(g.clone()).unwrap(), &h).unwrap();
                let pu = permuted.update(&Tensor::vector(pg).unwrap(), &h).unwrap();
                for (k, &i) in perm.iter().enumerate() {
                    prop_assert_eq!(pu.data()[k].to_bits(), u.data()[i].to_bits());
                }
            }
        }
    }
}
