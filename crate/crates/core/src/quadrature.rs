//! Adaptive Simpson quadrature with an absolute-error target.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;
/// Forced initial bisections; oscillatory integrands on symmetric intervals
/// can otherwise fool the first error estimate.
const MIN_DEPTH: u32 = 4;

/// Integrates `f` over `[a, b]` to absolute tolerance `abs_tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::Usage(format!("bad integration interval [{a}, {b}]")));
    }
    if !(abs_tol.is_finite() && abs_tol > 0.0) {
        return Err(Error::Usage(format!("bad quadrature tolerance {abs_tol}")));
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(f, a, b, fa, fm, fb, whole, abs_tol, 0)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth >= MIN_DEPTH && delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Numeric(format!(
            "quadrature did not converge on [{a}, {b}] (residual {:.3e} at depth {depth})",
            delta.abs()
        )));
    }
    let lv = adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?;
    let rv = adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?;
    Ok(lv + rv)
}
