use crate::{Error, Result};

/// Result of [`bisect_minimize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection {
    pub x: f64,
    /// Midpoint derivative evaluations performed.
    pub iterations: usize,
}

/// Finds a stationary point of a strictly convex function by bisection on
/// the sign of its derivative.
///
/// Requires `dfn(lo) < 0 < dfn(hi)`. Each iteration halves the bracket, so
/// at most `ceil(log2((hi - lo) / tol))` evaluations are made before the
/// bracket is narrower than `tol`; the midpoint of the final bracket is
/// returned. An exactly zero derivative ends the search early.
pub fn bisect_minimize(
    mut dfn: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Bisection> {
    if !(tol > 0.0) || !lo.is_finite() || !hi.is_finite() || !(lo < hi) {
        return Err(Error::Config(format!(
            "bisection needs finite lo < hi and tol > 0 (lo={lo}, hi={hi}, tol={tol})"
        )));
    }
    let (dlo, dhi) = (dfn(lo), dfn(hi));
    if !(dlo < 0.0 && dhi > 0.0) {
        return Err(Error::Bracket { lo, hi, dlo, dhi });
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut iterations = 0;
    while hi - lo > tol && iterations < max_iter {
        let mid = lo + (hi - lo) / 2.0;
        let d = dfn(mid);
        iterations += 1;
        if !d.is_finite() {
            return Err(Error::NonFinite("derivative"));
        }
        if d == 0.0 {
            return Ok(Bisection { x: mid, iterations });
        }
        if d < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Bisection {
        x: lo + (hi - lo) / 2.0,
        iterations,
    })
}
