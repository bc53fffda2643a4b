//! Small numeric utilities: bracketing root search, golden-section maximum,
//! and adaptive Simpson quadrature. These back the calibration routines and
//! the independent checks in the test suites; none of them assume anything
//! about the physics.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Root of `f` in `[lo, hi]` by bisection. Requires a sign change across the
/// bracket; `what` names the quantity in the error message.
pub fn bisect<T: Real>(
    mut f: impl FnMut(T) -> T,
    mut lo: T,
    mut hi: T,
    tol: T,
    what: &str,
) -> Result<T> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    if (flo > T::zero()) == (fhi > T::zero()) {
        return Err(Error::NoRoot {
            what: what.to_string(),
            lo: lo.to_f64().unwrap_or(f64::NAN),
            hi: hi.to_f64().unwrap_or(f64::NAN),
        });
    }
    // 200 halvings exhaust f64 resolution on any physical bracket.
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = (lo + hi) * T::lit(0.5);
        let fmid = f(mid);
        if fmid == T::zero() {
            return Ok(mid);
        }
        if (fmid > T::zero()) == (flo > T::zero()) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * T::lit(0.5))
}

/// Argmax of a unimodal `f` on `[lo, hi]` by golden-section search, to
/// absolute abscissa tolerance `tol`.
pub fn golden_max<T: Real>(mut f: impl FnMut(T) -> T, mut lo: T, mut hi: T, tol: T) -> T {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) * T::lit(0.5);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while (hi - lo).abs() > tol {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    (lo + hi) * T::lit(0.5)
}

/// ∫ₐᵇ f dx by adaptive Simpson with absolute tolerance `tol`.
///
/// Fails with [`Error::Quadrature`] if the recursion cannot certify the
/// tolerance within a depth of 40 (≈ interval split into 2⁴⁰ pieces).
pub fn adaptive_simpson<T: Real>(f: &impl Fn(T) -> T, a: T, b: T, tol: T) -> Result<T> {
    let half = T::lit(0.5);
    let m = (a + b) * half;
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson_rule(a, b, fa, fm, fb);
    simpson_recurse(f, a, b, fa, fm, fb, whole, tol, 40)
}

fn simpson_rule<T: Real>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<T: Real>(
    f: &impl Fn(T) -> T,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
) -> Result<T> {
    let half = T::lit(0.5);
    let m = (a + b) * half;
    let lm = (a + m) * half;
    let rm = (m + b) * half;
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_rule(a, m, fa, flm, fm);
    let right = simpson_rule(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // |delta|/15 is the standard error estimate for the refined value.
    if delta.abs() <= T::lit(15.0) * tol {
        return Ok(left + right + delta / T::lit(15.0));
    }
    if depth == 0 {
        return Err(Error::Quadrature {
            achieved: (delta / T::lit(15.0)).abs().to_f64().unwrap_or(f64::NAN),
            requested: tol.to_f64().unwrap_or(f64::NAN),
        });
    }
    let tol_half = tol * half;
    let l = simpson_recurse(f, a, m, fa, flm, fm, left, tol_half, depth - 1)?;
    let r = simpson_recurse(f, m, b, fm, frm, fb, right, tol_half, depth - 1)?;
    Ok(l + r)
}
