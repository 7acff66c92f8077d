//! Adaptive quadrature used by the verification oracles.
//!
//! The hydrostatic and arc-length closed forms used by the model are
//! cross-checked against direct numerical integration of the hull offsets.
//! The integrator is an adaptive Simpson rule with Richardson-style error
//! control; it is deliberately independent of the closed forms it checks.

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute accuracy
/// roughly `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    adapt(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

/// Nested adaptive Simpson for `∬ f(y, z) dz dy` over a rectangle where the
/// inner bound may depend on `y`.
pub fn integrate2<F, G>(f: F, y0: f64, y1: f64, z_range: G, tol: f64) -> f64
where
    F: Fn(f64, f64) -> f64,
    G: Fn(f64) -> (f64, f64),
{
    integrate(
        |y| {
            let (z0, z1) = z_range(y);
            integrate(|z| f(y, z), z0, z1, tol * 1e-2)
        },
        y0,
        y1,
        tol,
    )
}

const MAX_DEPTH: u32 = 48;

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        // Richardson extrapolation removes the leading error term.
        left + right + delta / 15.0
    } else {
        adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}
