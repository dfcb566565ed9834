//! Scalar root finding and adaptive quadrature shared by the engines.

use crate::error::{CritError, Result};

pub const ROOT_REL_TOL: f64 = 1e-12;
pub const ROOT_MAX_ITER: usize = 200;
pub const QUAD_ABS_FLOOR: f64 = 1e-15;

/// Finds a root of `f` inside `[lo, hi]`, where `f(lo)` and `f(hi)` differ in sign.
///
/// Bisection keeps the bracket; secant (Illinois-weighted regula falsi) steps are
/// taken whenever they land strictly inside it.
/// Stops when the bracket is narrower than `rel_tol * max(|a|, |b|) + abs_tol`.
pub fn bracketed_root<F>(op: &'static str, mut f: F, lo: f64, hi: f64, rel_tol: f64, abs_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(CritError::NoBracket { op });
    }
    // side = +1 when the last retained endpoint was `b`, -1 for `a`
    let mut side = 0i8;
    let mut last_width = f64::INFINITY;
    let mut stalled = 0u8;
    for _ in 0..ROOT_MAX_ITER {
        let width = b - a;
        let mid = a + 0.5 * width;
        if width <= rel_tol * a.abs().max(b.abs()) + abs_tol || mid <= a || mid >= b {
            return Ok(if fa.abs() < fb.abs() { a } else { b });
        }
        if width > 0.5 * last_width {
            stalled += 1;
        } else {
            stalled = 0;
        }
        last_width = width;
        let mut x = (a * fb - b * fa) / (fb - fa);
        // bisect when the secant point leaves the bracket or the bracket stops shrinking
        if !x.is_finite() || x <= a || x >= b || stalled >= 3 {
            x = mid;
            stalled = 0;
        }
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if !fx.is_finite() {
            // cannot trust this point; bisect instead
            let fm = f(mid);
            if fm.signum() == fa.signum() {
                a = mid;
                fa = fm;
            } else {
                b = mid;
                fb = fm;
            }
            continue;
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    Err(CritError::RootNotConverged {
        op,
        iterations: ROOT_MAX_ITER,
    })
}

/// Grows `hi` geometrically from `lo` until `f` changes sign, then solves.
/// `f` must be increasing with `f(lo) <= 0`.
pub fn increasing_root<F>(op: &'static str, mut f: F, lo: f64, first_hi: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let flo = f(lo);
    if flo == 0.0 {
        return Ok(lo);
    }
    if flo > 0.0 {
        return Err(CritError::NoBracket { op });
    }
    let mut hi = first_hi.max(lo + f64::EPSILON * lo.abs().max(1.0));
    let mut step = (hi - lo).max(1.0);
    for _ in 0..400 {
        let fhi = f(hi);
        if fhi >= 0.0 {
            return bracketed_root(op, f, lo, hi, ROOT_REL_TOL, 0.0);
        }
        step *= 2.0;
        hi = lo + step;
        if !hi.is_finite() {
            break;
        }
    }
    Err(CritError::NoBracket { op })
}

/// Adaptive interval-halving Simpson quadrature of `f` over `[a, b]`.
///
/// The error target is `max(rel_tol * |I|, abs_floor)` where `I` is a coarse
/// composite estimate of the integral.
pub fn adaptive_simpson<F>(op: &'static str, f: F, a: f64, b: f64, rel_tol: f64, abs_floor: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return adaptive_simpson(op, f, b, a, rel_tol, abs_floor).map(|v| -v);
    }
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    let mut panels = Vec::with_capacity(PANELS);
    let mut coarse = 0.0;
    for p in 0..PANELS {
        let x0 = a + p as f64 * h;
        let x1 = if p + 1 == PANELS { b } else { x0 + h };
        let xm = 0.5 * (x0 + x1);
        let (f0, fm, f1) = (f(x0), f(xm), f(x1));
        let s = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        coarse += s;
        panels.push((x0, x1, f0, fm, f1, s));
    }
    let tol = (rel_tol * coarse.abs()).max(abs_floor);
    let per_panel = tol / PANELS as f64;
    let mut total = 0.0;
    for (x0, x1, f0, fm, f1, s) in panels {
        total += simpson_rec(op, &f, x0, x1, f0, fm, f1, s, per_panel, 56)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F>(
    op: &'static str,
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (m - a) <= 1e-15 * m.abs().max(1.0) {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(CritError::QuadratureNotConverged { op });
    }
    Ok(simpson_rec(op, f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_rec(op, f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Ordinary least squares `y = intercept + slope * x`, returning `(slope, intercept, r2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, intercept, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_of_cubic() {
        let r = bracketed_root("t", |x| x * x * x - 2.0, 0.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn root_rejects_missing_bracket() {
        let e = bracketed_root("t", |x| x * x + 1.0, -1.0, 1.0, 1e-12, 0.0).unwrap_err();
        assert_eq!(e, CritError::NoBracket { op: "t" });
    }

    #[test]
    fn increasing_root_expands() {
        let r = increasing_root("t", |x| x.ln() - 10.0, 1.0, 2.0).unwrap();
        assert!((r / 10f64.exp() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_matches_closed_forms() {
        let v = adaptive_simpson("t", |x| x.sqrt(), 0.0, 4.0, 1e-12, 1e-15).unwrap();
        assert!((v - 16.0 / 3.0).abs() < 1e-9);
        let v = adaptive_simpson("t", |x| (-x).exp(), 0.0, 30.0, 1e-12, 1e-15).unwrap();
        assert!((v - (1.0 - (-30f64).exp())).abs() < 1e-11);
        assert_eq!(adaptive_simpson("t", |x| x, 1.0, 1.0, 1e-10, 1e-15).unwrap(), 0.0);
    }

    #[test]
    fn linear_fit_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let (s, c, r2) = linear_fit(&x, &y);
        assert!((s + 2.0).abs() < 1e-12 && (c - 3.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }
}
