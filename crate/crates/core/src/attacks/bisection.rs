use crate::error::{Error, Result};

/// Result of a zero-crossing search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub point: f64,
    /// Whether the initial bracket had a sign change.
    pub bracketed: bool,
    /// Final bracket; `hi` is on the `g >= 0` side when bracketed and the
    /// function is increasing.
    pub lo: f64,
    pub hi: f64,
}

/// Bisection on `[lo, hi]` for a zero crossing of `g`, treating `g >= 0` as
/// the positive side. With a sign change the midpoint of the final bracket
/// (width `(hi - lo) / 2^iters`) is returned; otherwise the end whose value
/// is closest to zero.
pub fn bisect<G: FnMut(f64) -> f64>(mut g: G, lo: f64, hi: f64, iters: usize) -> Result<Crossing> {
    if !(lo <= hi) {
        return Err(Error::argument(format!("bisection needs lo <= hi, got [{lo}, {hi}]")));
    }
    if iters == 0 {
        return Err(Error::argument("bisection needs at least one iteration"));
    }
    let (glo, ghi) = (g(lo), g(hi));
    if (glo >= 0.0) == (ghi >= 0.0) {
        let point = if glo.abs() <= ghi.abs() { lo } else { hi };
        return Ok(Crossing {
            point,
            bracketed: false,
            lo,
            hi,
        });
    }
    let lo_positive = glo >= 0.0;
    let (mut a, mut b) = (lo, hi);
    for _ in 0..iters {
        let m = 0.5 * (a + b);
        if (g(m) >= 0.0) == lo_positive {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(Crossing {
        point: 0.5 * (a + b),
        bracketed: true,
        lo: a,
        hi: b,
    })
}

/// Point-only form of [`bisect`].
pub fn bisection_zero_crossing<G: FnMut(f64) -> f64>(g: G, lo: f64, hi: f64, iters: usize) -> Result<f64> {
    Ok(bisect(g, lo, hi, iters)?.point)
}

/// Bisection steps after each PGD run inside the adaptive-norm attack.
pub const TRAIN_BISECTION_STEPS: usize = 10;
