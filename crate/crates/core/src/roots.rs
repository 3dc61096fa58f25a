//! Bracketed scalar root finding.

/// Outcome of a bracketed search on an increasing function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl Bracket {
    /// The endpoint with the smaller residual.
    pub fn best(&self) -> f64 {
        if self.f_lo.abs() <= self.f_hi.abs() {
            self.lo
        } else {
            self.hi
        }
    }
}

/// Illinois regula falsi on `[lo, hi]` with `f(lo) ≤ 0 ≤ f(hi)`.
///
/// Falls back to bisection whenever the bracket fails to halve over two
/// consecutive steps or a function value is not finite, so the bracket width
/// at least halves every three iterations. Stops when the width is at most
/// `tol(lo, hi)`, on an exact zero, or after `max_iter` steps.
pub fn illinois(
    mut f: impl FnMut(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    mut f_lo: f64,
    mut f_hi: f64,
    tol: impl Fn(f64, f64) -> f64,
    max_iter: usize,
) -> Bracket {
    debug_assert!(lo <= hi);
    let mut side = 0i8;
    let mut width_ref = hi - lo;
    let mut stalled = 0;
    for it in 0..max_iter {
        if f_lo == 0.0 {
            return Bracket {
                lo,
                hi: lo,
                f_lo,
                f_hi: f_lo,
                iterations: it,
                converged: true,
            };
        }
        if f_hi == 0.0 {
            return Bracket {
                lo: hi,
                hi,
                f_lo: f_hi,
                f_hi,
                iterations: it,
                converged: true,
            };
        }
        if hi - lo <= tol(lo, hi) {
            return Bracket {
                lo,
                hi,
                f_lo,
                f_hi,
                iterations: it,
                converged: true,
            };
        }
        let secant_ok = f_lo.is_finite() && f_hi.is_finite() && stalled < 2;
        let mut x = if secant_ok {
            (lo * f_hi - hi * f_lo) / (f_hi - f_lo)
        } else {
            0.5 * (lo + hi)
        };
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let bisected = !secant_ok;
        let fx = f(x);
        if fx.is_nan() {
            // treat as the upper side to keep the bracket shrinking
            hi = x;
            f_hi = f64::INFINITY;
            side = 0;
        } else if fx < 0.0 {
            lo = x;
            f_lo = fx;
            if side == -1 && !bisected {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            f_hi = fx;
            if side == 1 && !bisected {
                f_lo *= 0.5;
            }
            side = 1;
        }
        let width = hi - lo;
        if bisected || width <= 0.5 * width_ref {
            width_ref = width;
            stalled = 0;
        } else {
            stalled += 1;
        }
    }
    Bracket {
        lo,
        hi,
        f_lo,
        f_hi,
        iterations: max_iter,
        converged: hi - lo <= tol(lo, hi),
    }
}

/// Relative-plus-absolute width tolerance.
pub fn rel_tol(rel: f64, abs: f64) -> impl Fn(f64, f64) -> f64 {
    move |lo: f64, hi: f64| rel * lo.abs().max(hi.abs()) + abs
}
