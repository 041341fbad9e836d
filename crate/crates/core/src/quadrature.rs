//! Adaptive Simpson quadrature.
//!
//! Every integral in the crate goes through [`adaptive_simpson`]: Debye
//! function, Gaussian copula CDF, expected sales and the sum-of-demands CDF.
//! The interval is first cut into a floor of equal panels so that narrow
//! features cannot hide between the three initial nodes of a single panel.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Sum of the Richardson error estimates over all accepted subintervals.
    pub error: f64,
    pub evaluations: usize,
}

struct State<F> {
    f: F,
    evaluations: usize,
    error: f64,
    unresolved: f64,
}

impl<F: FnMut(f64) -> f64> State<F> {
    fn eval(&mut self, x: f64) -> f64 {
        self.evaluations += 1;
        (self.f)(x)
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm);
        let frm = self.eval(rm);
        let h = b - a;
        let left = h / 12.0 * (fa + 4.0 * flm + fm);
        let right = h / 12.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            self.error += delta.abs() / 15.0;
            return left + right + delta / 15.0;
        }
        // Once the interval can no longer be split in floating point, accept
        // what we have and book the residual as unresolved.
        if depth == 0 || lm <= a || rm >= b || m <= lm || m >= rm {
            self.error += delta.abs() / 15.0;
            self.unresolved += delta.abs() / 15.0;
            return left + right + delta / 15.0;
        }
        self.refine(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + self.refine(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`, starting from
/// `panels` equal panels (at least one).
///
/// Returns [`Error::Quadrature`] if bisection bottomed out on subintervals
/// whose combined error estimate still exceeds `tol`.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, panels: usize) -> Result<Integral> {
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0, evaluations: 0 });
    }
    if b < a {
        let r = adaptive_simpson(f, b, a, tol, panels)?;
        return Ok(Integral { value: -r.value, ..r });
    }
    let panels = panels.max(1);
    let mut st = State { f, evaluations: 0, error: 0.0, unresolved: 0.0 };
    let width = (b - a) / panels as f64;
    let panel_tol = tol / panels as f64;
    let mut total = 0.0;
    let mut lo = a;
    let mut f_lo = st.eval(a);
    for i in 0..panels {
        let hi = if i + 1 == panels { b } else { a + width * (i + 1) as f64 };
        let mid = 0.5 * (lo + hi);
        let f_mid = st.eval(mid);
        let f_hi = st.eval(hi);
        let whole = (hi - lo) / 6.0 * (f_lo + 4.0 * f_mid + f_hi);
        total += st.refine(lo, hi, f_lo, f_mid, f_hi, whole, panel_tol, MAX_DEPTH);
        lo = hi;
        f_lo = f_hi;
    }
    if st.unresolved > tol {
        return Err(Error::Quadrature { achieved: st.error, requested: tol });
    }
    Ok(Integral { value: total, error: st.error, evaluations: st.evaluations })
}

/// Integrate over consecutive pieces `[breaks[i], breaks[i+1]]`, spreading
/// `panels` and `tol` over the pieces in proportion to their width.
pub fn adaptive_simpson_pieces<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], tol: f64, panels: usize) -> Result<Integral> {
    let span = breaks.last().copied().unwrap_or(0.0) - breaks.first().copied().unwrap_or(0.0);
    let mut out = Integral { value: 0.0, error: 0.0, evaluations: 0 };
    if span <= 0.0 {
        return Ok(out);
    }
    for w in breaks.windows(2) {
        let share = (w[1] - w[0]) / span;
        if share <= 0.0 {
            continue;
        }
        let n = ((panels as f64 * share).ceil() as usize).max(1);
        let piece = adaptive_simpson(&mut f, w[0], w[1], (tol * share).max(f64::MIN_POSITIVE), n)?;
        out.value += piece.value;
        out.error += piece.error;
        out.evaluations += piece.evaluations;
    }
    Ok(out)
}
