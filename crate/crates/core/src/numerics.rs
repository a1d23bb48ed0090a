//! Special functions and root finding shared by the analytic delay formulas.
//!
//! Only the lower real branch `W₋₁` of the Lambert W function is needed: every
//! extremal rising-output delay and the characterization function are written
//! in terms of it.

use std::f64::consts::E;

use thiserror::Error;

/// `-1/e`, the branch point of the Lambert W function.
pub const BRANCH_POINT: f64 = -1.0 / E;

const HALLEY_MAX_ITER: usize = 64;
const BISECTION_MAX_ITER: usize = 2000;
const BRENT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("lambert W-1 is only defined on [-1/e, 0), got {0:e}")]
    LambertDomain(f64),
    #[error("no sign change on [{lo:e}, {hi:e}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("invalid bracket [{lo:e}, {hi:e}] with tolerance {tol:e}")]
    InvalidBracket { lo: f64, hi: f64, tol: f64 },
    #[error("root solver did not converge after {iterations} iterations (residual {residual:e}, bracket width {width:e})")]
    NoConvergence { iterations: usize, residual: f64, width: f64 },
}

/// Lower real branch of the Lambert W function.
///
/// Returns `w <= -1` with `w * exp(w) == x` for `x` in `[-1/e, 0)`.
pub fn lambert_w_minus1(x: f64) -> Result<f64, NumericsError> {
    if !(BRANCH_POINT..0.0).contains(&x) {
        // The rounded constant can sit a hair above the exact branch point.
        if (x - BRANCH_POINT).abs() > 1e-15 || x.is_nan() {
            return Err(NumericsError::LambertDomain(x));
        }
    }
    if (x - BRANCH_POINT).abs() < 1e-12 {
        return Ok(-1.0);
    }

    let mut w = initial_guess(x);
    for _ in 0..HALLEY_MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let next = w - f / denom;
        if !next.is_finite() || next > -1.0 {
            return Ok(bisect_branch(x));
        }
        let converged = (next - w).abs() <= 4.0 * f64::EPSILON * next.abs();
        w = next;
        if converged {
            break;
        }
    }
    if relative_residual(w, x) > 1e-13 {
        return Ok(bisect_branch(x));
    }
    Ok(w)
}

/// `W₋₁(x)` given `y = ln(-x)`, for `y <= -1`.
///
/// Solves `w + ln(-w) = y`. Usable when `x` itself underflows, e.g. for
/// `x = -exp(-1 - k)` with `k` in the millions.
pub fn lambert_w_minus1_log(y: f64) -> Result<f64, NumericsError> {
    if y.is_nan() || y > -1.0 + 1e-15 {
        if y <= -1.0 + 1e-12 {
            return Ok(-1.0);
        }
        return Err(NumericsError::LambertDomain(-(y.exp())));
    }
    if y > -40.0 {
        return lambert_w_minus1(-(y.exp()));
    }
    // Newton on g(w) = w + ln(-w) - y; g is monotone on (-inf, -1].
    let mut w = y - (-y).ln();
    for _ in 0..HALLEY_MAX_ITER {
        let g = w + (-w).ln() - y;
        let next = w - g / (1.0 + 1.0 / w);
        let done = (next - w).abs() <= 4.0 * f64::EPSILON * next.abs();
        w = next;
        if done {
            break;
        }
    }
    Ok(w)
}

fn initial_guess(x: f64) -> f64 {
    if x < -0.25 {
        // Series around the branch point in p = -sqrt(2(1 + e x)).
        let p = -(2.0 * (1.0 + E * x)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else {
        let l1 = (-x).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    }
}

fn relative_residual(w: f64, x: f64) -> f64 {
    ((w * w.exp() - x) / x).abs()
}

// w e^w is decreasing on (-inf, -1], so plain bisection on that interval is safe.
fn bisect_branch(x: f64) -> f64 {
    let mut hi = -1.0_f64;
    let mut lo = -2.0_f64;
    while lo * lo.exp() < x {
        lo *= 2.0;
    }
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if mid * mid.exp() < x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A scalar root problem with a sign-changing bracket.
pub struct BracketedRootProblem<F> {
    pub function: F,
    pub lo: f64,
    pub hi: f64,
    pub abs_tolerance: f64,
}

/// Outcome of [`solve_bracketed`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootReport {
    pub root: f64,
    /// Final bracket, always containing a sign change (or an exact zero).
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub residual: f64,
}

/// Brent's method: inverse quadratic interpolation and secant steps guarded by
/// bisection. Deterministic for fixed inputs.
pub fn solve_bracketed<F>(problem: BracketedRootProblem<F>) -> Result<RootReport, NumericsError>
where
    F: Fn(f64) -> f64,
{
    let BracketedRootProblem { function: f, lo, hi, abs_tolerance: tol } = problem;
    if !(lo < hi) || !(tol > 0.0) || !lo.is_finite() || !hi.is_finite() {
        return Err(NumericsError::InvalidBracket { lo, hi, tol });
    }
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(RootReport { root: a, bracket: (a, a), iterations: 0, residual: 0.0 });
    }
    if fb == 0.0 {
        return Ok(RootReport { root: b, bracket: (b, b), iterations: 0, residual: 0.0 });
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(NumericsError::NoSignChange { lo, hi, f_lo: fa, f_hi: fb });
    }

    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for iter in 1..=BRENT_MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.25 * tol;
        let xm = 0.5 * (c - b);
        if fb == 0.0 || (c - b).abs() <= tol.max(4.0 * f64::EPSILON * b.abs()) {
            let bracket = if b < c { (b, c) } else { (c, b) };
            return Ok(RootReport { root: b, bracket, iterations: iter, residual: fb.abs() });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = f(b);
    }
    Err(NumericsError::NoConvergence {
        iterations: BRENT_MAX_ITER,
        residual: fb.abs(),
        width: (c - b).abs(),
    })
}
