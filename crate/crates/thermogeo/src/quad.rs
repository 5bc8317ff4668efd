//! One-dimensional quadrature: adaptive Simpson for expansion-law integrals
//! and composite 5-point Gauss-Legendre for the radial solver.

use crate::error::{Error, Result};

pub const SIMPSON_TOL: f64 = 1e-10;
pub const SIMPSON_MAX_SUBDIV: usize = 1 << 20;

/// Adaptive Simpson with Richardson correction. `tol` is an absolute
/// tolerance on the whole interval.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut budget = SIMPSON_MAX_SUBDIV;
    let fa = f(lo);
    let fb = f(hi);
    let m = 0.5 * (lo + hi);
    let fm = f(m);
    let whole = simpson(lo, hi, fa, fm, fb);
    let v = simpson_rec(f, lo, hi, fa, fm, fb, whole, tol, &mut budget)?;
    Ok(sign * v)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    budget: &mut usize,
) -> Result<f64> {
    if *budget == 0 {
        return Err(Error::QuadratureFailure(format!(
            "subdivision budget exhausted on [{a}, {b}]"
        )));
    }
    *budget -= 1;
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let err = left + right - whole;
    if err.abs() <= 15.0 * tol || (b - a) < 1e-14 * (b.abs() + a.abs() + 1.0) {
        return Ok(left + right + err / 15.0);
    }
    let half = 0.5 * tol;
    let l = simpson_rec(f, a, m, fa, flm, fm, left, half, budget)?;
    let r = simpson_rec(f, m, b, fm, frm, fb, right, half, budget)?;
    Ok(l + r)
}

/// 5-point Gauss-Legendre nodes and weights on [-1, 1].
const GL5_X: [f64; 5] = [
    -0.906179845938664,
    -0.5384693101056831,
    0.0,
    0.5384693101056831,
    0.906179845938664,
];
const GL5_W: [f64; 5] = [
    0.23692688505618908,
    0.47862867049936647,
    0.5688888888888889,
    0.47862867049936647,
    0.23692688505618908,
];

pub fn gauss_legendre_5(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for i in 0..5 {
        s += GL5_W[i] * f(c + h * GL5_X[i]);
    }
    s * h
}

pub fn composite_gl5(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        s += gauss_legendre_5(f, a + p as f64 * h, a + (p + 1) as f64 * h);
    }
    s
}

/// Partial integrals of `f` from `a` to each panel edge; result has
/// `panels + 1` entries starting at 0.
pub fn cumulative_gl5(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> Vec<f64> {
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for p in 0..panels {
        acc += gauss_legendre_5(f, a + p as f64 * h, a + (p + 1) as f64 * h);
        out.push(acc);
    }
    out
}
