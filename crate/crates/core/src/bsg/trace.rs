//! Scalar transcripts of the BSG update and their CSV form.

use std::io::Write;

use super::{bsg_init, bsg_step_traced, BsgConfig, BsgState, StepRecord};
use crate::optim::InnerHyper;
use crate::{Error, Result, Tensor};

/// One step of a scalar BSG run. `x` is the iterate produced by the step and
/// `g` the derivative at the iterate the step started from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub step: usize,
    pub x: f64,
    pub g: f64,
    pub u: f64,
    pub n: f64,
    pub p: f64,
    pub reset: bool,
}

/// Runs BSG on a one-dimensional objective `f(x) -> (value, derivative)`.
pub fn scalar_trace(
    mut f: impl FnMut(f64) -> (f64, f64),
    x0: f64,
    steps: usize,
    cfg: &BsgConfig,
    h: &InnerHyper,
) -> Result<Vec<TraceRecord>> {
    if steps == 0 {
        return Err(Error::Config("scalar trace needs at least one step".into()));
    }
    let mut state = bsg_init(&[1], cfg)?;
    let mut x = Tensor::scalar(x0)?;
    let mut out = Vec::with_capacity(steps);
    for step in 1..=steps {
        let (value, g) = f(x.data()[0]);
        if !value.is_finite() || !g.is_finite() {
            return Err(Error::NonFinite("scalar objective"));
        }
        let rec = bsg_step_traced(&x, &Tensor::scalar(g)?, &mut state, h)?;
        out.push(TraceRecord {
            step,
            x: rec.x_next.data()[0],
            g,
            u: rec.u.data()[0],
            n: state.n.data()[0],
            p: state.p.data()[0],
            reset: rec.reset[0],
        });
        x = rec.x_next;
    }
    Ok(out)
}

/// One `(step, element)` row of a transcript.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranscriptRow {
    pub step: usize,
    pub elem: usize,
    pub x: f64,
    pub g: f64,
    pub u: f64,
    pub n: f64,
    pub p: f64,
    pub reset: bool,
}

impl TranscriptRow {
    /// Rows for every element of one traced step, read after the step.
    pub fn from_step(step: usize, g: &Tensor, rec: &StepRecord, state: &BsgState) -> Vec<Self> {
        (0..g.len())
            .map(|i| TranscriptRow {
                step,
                elem: i,
                x: rec.x_next.data()[i],
                g: g.data()[i],
                u: rec.u.data()[i],
                n: state.n.data()[i],
                p: state.p.data()[i],
                reset: rec.reset[i],
            })
            .collect()
    }
}

impl From<TraceRecord> for TranscriptRow {
    fn from(r: TraceRecord) -> Self {
        TranscriptRow {
            step: r.step,
            elem: 0,
            x: r.x,
            g: r.g,
            u: r.u,
            n: r.n,
            p: r.p,
            reset: r.reset,
        }
    }
}

/// Writes `step,elem,x,g,u,n,p,r` rows. Floats use the shortest
/// representation that parses back to the same bits.
pub fn write_transcript_csv<W: Write>(mut w: W, rows: &[TranscriptRow]) -> std::io::Result<()> {
    writeln!(w, "step,elem,x,g,u,n,p,r")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:?},{:?},{:?},{:?},{:?},{}",
            r.step, r.elem, r.x, r.g, r.u, r.n, r.p, r.reset as u8
        )?;
    }
    Ok(())
}
