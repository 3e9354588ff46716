//! The BSG update rule.
//!
//! Each parameter coordinate carries its own search interval `[n, p]`. On
//! every step:
//!
//! 1. the inner optimizer produces `u` from the gradient `g`;
//! 2. the reset flag `r = [n - p + |u| > 0]` marks an interval that is
//!    inverted or narrower than the inner step;
//! 3. if `g <= 0`, `n <- x - u` and, on reset, `p <- n - α·u`;
//!    otherwise `p <- x - u` and, on reset, `n <- p - α·u`;
//! 4. the parameter moves to the midpoint `(n + p) / 2`.
//!
//! With [`BsgConfig::abs_reset`] the reset uses `α·|u|` pushed away from the
//! freshly moved endpoint, which always yields `n < p` even when momentum
//! makes `sign(u) != sign(g)`.

mod bisect;
mod trace;

pub use bisect::{bisect_minimize, Bisection};
pub use trace::{scalar_trace, write_transcript_csv, TraceRecord, TranscriptRow};

use crate::optim::{InnerHyper, InnerKind, InnerState};
use crate::{Error, Result, Tensor};

/// Initial negative-gradient boundary.
pub const DEFAULT_N_INIT: f64 = 100.0;
/// Initial positive-gradient boundary.
pub const DEFAULT_P_INIT: f64 = 0.0;
pub const DEFAULT_ALPHA: f64 = 2.0;
/// Interval factors compared in the α sweep.
pub const ALPHA_SWEEP: [f64; 5] = [0.5, 1.0, 2.0, 5.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsgConfig {
    /// Interval factor: width of a freshly reset interval in units of `u`.
    pub alpha: f64,
    pub abs_reset: bool,
    pub n_init: f64,
    pub p_init: f64,
    pub inner: InnerKind,
}

impl Default for BsgConfig {
    fn default() -> Self {
        BsgConfig {
            alpha: DEFAULT_ALPHA,
            abs_reset: false,
            n_init: DEFAULT_N_INIT,
            p_init: DEFAULT_P_INIT,
            inner: InnerKind::Adam,
        }
    }
}

impl BsgConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        BsgConfig {
            alpha,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!(
                "interval factor alpha must be > 0, got {}",
                self.alpha
            )));
        }
        if !self.n_init.is_finite() || !self.p_init.is_finite() {
            return Err(Error::Config("interval boundaries must be finite".into()));
        }
        Ok(())
    }
}

/// Per-parameter BSG state.
#[derive(Debug, Clone, PartialEq)]
pub struct BsgState {
    /// Negative-gradient boundary, one per element.
    pub n: Tensor,
    /// Positive-gradient boundary, one per element.
    pub p: Tensor,
    pub inner: InnerState,
    pub alpha: f64,
    pub abs_reset: bool,
    pub steps: u64,
    /// Resets that left `n >= p` (signed-u resets where `sign(u) != sign(g)`).
    pub inverted_resets: u64,
}

/// Creates BSG state for a parameter of the given shape.
pub fn bsg_init(shape: &[usize], cfg: &BsgConfig) -> Result<BsgState> {
    cfg.validate()?;
    Ok(BsgState {
        n: Tensor::new(shape, cfg.n_init)?,
        p: Tensor::new(shape, cfg.p_init)?,
        inner: InnerState::new(cfg.inner, shape)?,
        alpha: cfg.alpha,
        abs_reset: cfg.abs_reset,
        steps: 0,
        inverted_resets: 0,
    })
}

/// Returns whether the interval must be re-seeded: `n - p + |u| > 0`.
pub fn reset_flag(n: f64, p: f64, u: f64) -> Result<bool> {
    if !(n.is_finite() && p.is_finite() && u.is_finite()) {
        return Err(Error::NonFinite("reset flag input"));
    }
    Ok(n - p + u.abs() > 0.0)
}

/// Outcome of the boundary update for one coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordUpdate {
    pub n: f64,
    pub p: f64,
    pub reset: bool,
    pub x_next: f64,
}

/// Boundary update for one coordinate given its inner update `u`.
pub fn update_coordinate(
    x: f64,
    g: f64,
    u: f64,
    n: f64,
    p: f64,
    alpha: f64,
    abs_reset: bool,
) -> Result<CoordUpdate> {
    let reset = reset_flag(n, p, u)?;
    let r = if reset { 1.0 } else { 0.0 };
    let (n_next, p_next) = if g <= 0.0 {
        let n_next = x - u;
        let seeded = if abs_reset {
            n_next + alpha * u.abs()
        } else {
            n_next - alpha * u
        };
        (n_next, p * (1.0 - r) + seeded * r)
    } else {
        let p_next = x - u;
        let seeded = if abs_reset {
            p_next - alpha * u.abs()
        } else {
            p_next - alpha * u
        };
        (n * (1.0 - r) + seeded * r, p_next)
    };
    let x_next = (n_next + p_next) / 2.0;
    if !x_next.is_finite() {
        return Err(Error::NonFinite("bsg step"));
    }
    Ok(CoordUpdate {
        n: n_next,
        p: p_next,
        reset,
        x_next,
    })
}

/// Per-step diagnostics from [`bsg_step_traced`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub x_next: Tensor,
    pub u: Tensor,
    pub reset: Vec<bool>,
}

/// One BSG step; returns the new parameter values.
pub fn bsg_step(x: &Tensor, g: &Tensor, state: &mut BsgState, h: &InnerHyper) -> Result<Tensor> {
    bsg_step_traced(x, g, state, h).map(|rec| rec.x_next)
}

/// One BSG step, also returning `u` and the reset flags.
///
/// Inputs are validated before anything is mutated, so a rejected call leaves
/// the state untouched.
pub fn bsg_step_traced(
    x: &Tensor,
    g: &Tensor,
    state: &mut BsgState,
    h: &InnerHyper,
) -> Result<StepRecord> {
    x.same_shape(&state.n)?;
    g.same_shape(&state.n)?;
    x.validate()?;
    if g.validate().is_err() {
        return Err(Error::NonFinite("gradient"));
    }
    if h.kind != state.inner.kind() {
        return Err(Error::Config(format!(
            "hyperparameters are for {}, state holds {}",
            h.kind.name(),
            state.inner.kind().name()
        )));
    }
    let u = state.inner.update(g, h)?;

    let mut x_next = vec![0.0; x.len()];
    let mut reset = vec![false; x.len()];
    let (alpha, abs_reset) = (state.alpha, state.abs_reset);
    let n = state.n.data_mut();
    let p = state.p.data_mut();
    let coords = x.data().iter().zip(g.data()).zip(u.data());
    for (i, ((&xi, &gi), &ui)) in coords.enumerate() {
        let c = update_coordinate(xi, gi, ui, n[i], p[i], alpha, abs_reset)?;
        n[i] = c.n;
        p[i] = c.p;
        x_next[i] = c.x_next;
        reset[i] = c.reset;
        if c.reset && c.n >= c.p {
            state.inverted_resets += 1;
        }
    }
    state.steps += 1;
    let x_next = Tensor::from_vec(x.shape(), x_next)?;
    Ok(StepRecord { x_next, u, reset })
}

/// Early-stop rule: the largest `|u|` stays below `threshold` for
/// `patience` consecutive steps.
#[derive(Debug, Clone)]
pub struct StallDetector {
    pub threshold: f64,
    pub patience: usize,
    run: usize,
}

impl Default for StallDetector {
    fn default() -> Self {
        StallDetector {
            threshold: 1e-12,
            patience: 10,
            run: 0,
        }
    }
}

impl StallDetector {
    /// Records one step's `max |u|`; returns true once the run is long enough.
    pub fn observe(&mut self, max_abs_u: f64) -> bool {
        if max_abs_u < self.threshold {
            self.run += 1;
        } else {
            self.run = 0;
        }
        self.run >= self.patience
    }
}
