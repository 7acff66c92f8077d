//! Primal log-barrier interior-point method on the compiled problem.
//!
//! Phase 1 minimizes an auxiliary slack `s` subject to `F_i(z) <= s` until
//! a strictly feasible point appears (or `s` provably cannot reach zero).
//! Phase 2 follows the central path of
//!
//! ```text
//!     psi_t(z) = t F0(z) - sum_i log(-F_i(z)) - sum_j log-barriers(box)
//! ```
//!
//! with damped Newton steps and backtracking line search, multiplying `t`
//! by `mu` after each centering. Box bounds on the reduced variables get
//! dedicated diagonal barrier terms; a coordinate whose lower and upper
//! bound coincide is treated as fixed and removed from the Newton system
//! (this is how branch and bound pins integer variables).
//!
//! After the path reaches its final `t`, a short dual-polish loop drives
//! the barrier gradient itself toward zero. The line search there accepts
//! on gradient-norm decrease: at large `t` the barrier value is too big
//! for its floating-point resolution to certify the tiny decreases Newton
//! makes near the center, while the gradient norm stays well scaled.

use nalgebra::{DMatrix, DVector};

use crate::solve::compile::Compiled;
use crate::solve::SolveConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ContStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
}

pub(crate) struct ContResult {
    pub status: ContStatus,
    pub z: Vec<f64>,
    pub obj_log: f64,
    pub duals: Vec<f64>,
    pub kkt: f64,
    pub newton_iters: usize,
}

/// Per-node log-space box for the reduced variables.
#[derive(Debug, Clone)]
pub(crate) struct NodeBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl NodeBox {
    pub fn root(c: &Compiled) -> Self {
        Self { lo: c.lo.clone(), hi: c.hi.clone() }
    }
}

/// Coordinates whose box collapses to a point are fixed at that value.
const FIX_EPS: f64 = 1e-12;
/// Phase 1 stops as soon as the slack drops below this margin.
const FEAS_EXIT: f64 = 1e-4;
/// Log-space magnitude beyond which the problem is declared unbounded.
const LOG_RANGE: f64 = 340.0;
/// Largest per-iteration step in any coordinate. Near-singular Hessians can
/// produce enormous Newton directions along flat directions; capping the step
/// keeps iterates in numerically sane territory while still letting a truly
/// unbounded recession direction walk past `LOG_RANGE` within one centering.
const STEP_CAP: f64 = 50.0;
/// Barrier weight at which duals are extracted; see `solve_continuous`.
const DUAL_T: f64 = 1e8;
/// Synthetic box half-width for phase 1. Rows like `log l - u <= s` are
/// unbounded below in `z`, which would make the phase-1 barrier problem
/// itself unbounded; clipping the search to a generous range restores a
/// center. Problems that are only feasible beyond `exp(±170)` are outside
/// the supported numeric range.
const P1_RANGE: f64 = 170.0;

pub(crate) fn solve_continuous(c: &Compiled, node: &NodeBox, cfg: &SolveConfig) -> ContResult {
    let nz = c.nz;
    let fail = |status: ContStatus, iters: usize| ContResult {
        status,
        z: Vec::new(),
        obj_log: f64::NAN,
        duals: vec![0.0; c.rows.len()],
        kkt: f64::NAN,
        newton_iters: iters,
    };

    // Split coordinates into free and fixed, and check box consistency.
    let mut free: Vec<usize> = Vec::with_capacity(nz);
    let mut z = vec![0.0; nz];
    for j in 0..nz {
        let (lo, hi) = (node.lo[j], node.hi[j]);
        if lo > hi + FIX_EPS {
            return fail(ContStatus::Infeasible, 0);
        }
        if hi - lo <= FIX_EPS {
            z[j] = 0.5 * (lo + hi);
        } else {
            z[j] = init_coord(lo, hi);
            free.push(j);
        }
    }

    let mut iters = 0usize;

    // Make sure every row is finite at the start point; shrink toward the
    // box center if an exponential overflows. An empty row set evaluates
    // to -inf, which is fine.
    let overflowed = |v: f64| v.is_nan() || v == f64::INFINITY;
    for _ in 0..200 {
        if !overflowed(rows_max(c, &z)) && !overflowed(c.objective.value(&z)) {
            break;
        }
        for &j in &free {
            z[j] *= 0.5;
        }
    }
    if overflowed(rows_max(c, &z)) || overflowed(c.objective.value(&z)) {
        return fail(ContStatus::IterLimit, 0);
    }

    // Every coordinate pinned: the point is determined, only check it.
    if free.is_empty() {
        if rows_max(c, &z) > 0.0 {
            return fail(ContStatus::Infeasible, 0);
        }
        let t = 1.0 / cfg.gap_tol;
        let duals = c
            .rows
            .iter()
            .map(|r| 1.0 / (t * (-r.f.value(&z)).max(1e-300)))
            .collect();
        return ContResult {
            status: ContStatus::Optimal,
            obj_log: c.objective.value(&z),
            z,
            duals,
            kkt: 0.0,
            newton_iters: 0,
        };
    }

    // Phase 1: find a strictly feasible point, searching inside a wide
    // synthetic box so the auxiliary problem has a center even when some
    // rows are unbounded below in z.
    if rows_max(c, &z) > -FEAS_EXIT {
        let mut p1 = node.clone();
        for &j in &free {
            let lo = node.lo[j].max(-P1_RANGE);
            let hi = node.hi[j].min(P1_RANGE);
            if lo < hi {
                p1.lo[j] = lo;
                p1.hi[j] = hi;
            }
        }
        let mut s = rows_max(c, &z) + 1.0;
        let m = (c.rows.len() + count_box_sides(&p1, &free)) as f64;
        let mut t = 1.0;
        let mut feasible = false;
        'outer: while iters < cfg.max_newton {
            let done = center(c, &p1, &free, &mut z, Some(&mut s), t, cfg, &mut iters);
            if s <= -FEAS_EXIT {
                feasible = true;
                break 'outer;
            }
            if done == CenterOutcome::Diverged {
                return fail(ContStatus::IterLimit, iters);
            }
            if (m + 1.0) / t < 1e-12 {
                break 'outer;
            }
            t *= cfg.mu;
        }
        if !feasible {
            if s < -1e-9 {
                // Feasible but with a very thin interior; proceed.
            } else if iters >= cfg.max_newton {
                return fail(ContStatus::IterLimit, iters);
            } else {
                return fail(ContStatus::Infeasible, iters);
            }
        }
    }

    // Phase 2: central path on the true objective.
    let m = (c.rows.len() + count_box_sides(node, &free)) as f64;
    let mut t = 1.0;
    let t_final = (m.max(1.0) / cfg.gap_tol).max(1.0 / cfg.kkt_tol);
    loop {
        if iters >= cfg.max_newton {
            return fail(ContStatus::IterLimit, iters);
        }
        let outcome = center(c, node, &free, &mut z, None, t, cfg, &mut iters);
        if outcome == CenterOutcome::Diverged {
            return fail(ContStatus::IterLimit, iters);
        }
        if z.iter().any(|v| v.abs() > LOG_RANGE) || c.objective.value(&z) < -2.0 * LOG_RANGE {
            return fail(ContStatus::Unbounded, iters);
        }
        if t >= t_final {
            break;
        }
        t = (t * cfg.mu).min(t_final * 1.0000001);
    }

    // Duals are recovered from the barrier slacks at a separate center with
    // moderate weight. At the primal `t` the Hessian scale is ~t^2, so one
    // ulp of movement in `z` swings the barrier gradient by far more than
    // the stationarity tolerance: the best dual accuracy lives near
    // `DUAL_T`, where the central-path error `m/t` and the floating-point
    // floor `t * eps` balance out.
    let t_dual = t.min(DUAL_T);
    let mut zd = z.clone();
    if t_dual < t {
        center(c, node, &free, &mut zd, None, t_dual, cfg, &mut iters);
    }
    polish_duals(c, node, &free, &mut zd, t_dual, 0.05 * cfg.kkt_tol * t_dual, cfg, &mut iters);

    let mut duals = Vec::with_capacity(c.rows.len());
    for row in &c.rows {
        let f = row.f.value(&zd);
        duals.push(1.0 / (t_dual * (-f).max(1e-300)));
    }
    let gn = match assemble(c, node, &free, &zd, None, t_dual) {
        Some(q) => q.g.amax(),
        None => f64::NAN,
    };
    let kkt = (gn / t_dual).max(1.0 / t_dual);
    ContResult {
        status: ContStatus::Optimal,
        obj_log: c.objective.value(&z),
        z,
        duals,
        kkt,
        newton_iters: iters,
    }
}

fn init_coord(lo: f64, hi: f64) -> f64 {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => {
            if lo < -1.0 {
                0.0
            } else {
                lo + 1.0
            }
        }
        (false, true) => {
            if hi > 1.0 {
                0.0
            } else {
                hi - 1.0
            }
        }
        (false, false) => 0.0,
    }
}

fn rows_max(c: &Compiled, z: &[f64]) -> f64 {
    c.rows
        .iter()
        .map(|r| r.f.value(z))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn count_box_sides(node: &NodeBox, free: &[usize]) -> usize {
    free.iter()
        .map(|&j| node.lo[j].is_finite() as usize + node.hi[j].is_finite() as usize)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CenterOutcome {
    Converged,
    Stalled,
    Diverged,
}

/// Barrier value at a point, `None` when outside the domain.
fn psi_value(
    c: &Compiled,
    node: &NodeBox,
    free: &[usize],
    z: &[f64],
    s: Option<f64>,
    t: f64,
) -> Option<f64> {
    let mut psi = match s {
        Some(sv) => t * sv,
        None => t * c.objective.value(z),
    };
    if !psi.is_finite() {
        return None;
    }
    let shift = s.unwrap_or(0.0);
    for row in &c.rows {
        let f = row.f.value(z) - shift;
        if !(f < 0.0) {
            return None;
        }
        psi -= (-f).ln();
    }
    for &j in free {
        let (lo, hi) = (node.lo[j], node.hi[j]);
        if lo.is_finite() {
            let d = z[j] - lo;
            if !(d > 0.0) {
                return None;
            }
            psi -= d.ln();
        }
        if hi.is_finite() {
            let d = hi - z[j];
            if !(d > 0.0) {
                return None;
            }
            psi -= d.ln();
        }
    }
    psi.is_finite().then_some(psi)
}

/// Barrier value, gradient and Hessian projected onto the free coordinates
/// (plus the phase-1 slack column when `s` is given). `None` outside the
/// barrier domain.
struct Assembled {
    psi: f64,
    g: DVector<f64>,
    h: DMatrix<f64>,
}

fn assemble(
    c: &Compiled,
    node: &NodeBox,
    free: &[usize],
    z: &[f64],
    s: Option<f64>,
    t: f64,
) -> Option<Assembled> {
    let nz = c.nz;
    let phase1 = s.is_some();
    let s_col = nz; // full-space column used for the slack coordinate
    let nfull = nz + 1;
    let psi = psi_value(c, node, free, z, s, t)?;
    let mut h_full = DMatrix::<f64>::zeros(nfull, nfull);
    let mut g_full = DVector::<f64>::zeros(nfull);

    // Objective part.
    if phase1 {
        g_full[s_col] += t;
    } else {
        let (_, og) = c.objective.value_grad(z);
        for &(j, cv) in &og {
            g_full[j as usize] += t * cv;
        }
        c.objective.add_hess(z, t, &mut h_full);
    }
    // Inequality rows.
    let shift = s.unwrap_or(0.0);
    for row in &c.rows {
        let (fv, mut gf) = row.f.value_grad(z);
        let f = fv - shift;
        let w = 1.0 / (-f);
        if phase1 {
            gf.push((s_col as u32, -1.0));
        }
        for &(j, cv) in &gf {
            g_full[j as usize] += w * cv;
        }
        row.f.add_hess(z, w, &mut h_full);
        for &(i, ci) in &gf {
            for &(j, cj) in &gf {
                h_full[(i as usize, j as usize)] += w * w * ci * cj;
            }
        }
    }
    // Box barriers.
    for &j in free {
        let (lo, hi) = (node.lo[j], node.hi[j]);
        if lo.is_finite() {
            let d = z[j] - lo;
            g_full[j] -= 1.0 / d;
            h_full[(j, j)] += 1.0 / (d * d);
        }
        if hi.is_finite() {
            let d = hi - z[j];
            g_full[j] += 1.0 / d;
            h_full[(j, j)] += 1.0 / (d * d);
        }
    }

    // Project to the free coordinates.
    let nf = free.len() + phase1 as usize;
    let mut h = DMatrix::<f64>::zeros(nf, nf);
    let mut g = DVector::<f64>::zeros(nf);
    let mut actives: Vec<usize> = free.to_vec();
    if phase1 {
        actives.push(s_col);
    }
    for (a, &fa) in actives.iter().enumerate() {
        g[a] = g_full[fa];
        for (b, &fb) in actives.iter().enumerate() {
            h[(a, b)] = h_full[(fa, fb)];
        }
    }
    Some(Assembled { psi, g, h })
}

/// Newton direction with an escalating ridge; a hopelessly singular Hessian
/// (unbounded direction) falls back to steepest descent so the range check
/// can catch divergence.
fn newton_dir(h: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let nf = h.nrows();
    let mut ridge = 0.0;
    let base = h.diagonal().amax().max(1e-12);
    loop {
        let mut hr = h.clone();
        if ridge > 0.0 {
            for k in 0..nf {
                hr[(k, k)] += ridge;
            }
        }
        match hr.cholesky() {
            Some(ch) => return ch.solve(&(-g)),
            None => {
                ridge = if ridge == 0.0 { base * 1e-12 } else { ridge * 100.0 };
                if ridge > base * 10.0 {
                    let gn = g.amax().max(1.0);
                    return -g / gn;
                }
            }
        }
    }
}

/// One centering: damped Newton on `psi_t` at fixed `t`. When `s` is given
/// the phase-1 coordinate participates as an extra unknown.
fn center(
    c: &Compiled,
    node: &NodeBox,
    free: &[usize],
    z: &mut [f64],
    mut s: Option<&mut f64>,
    t: f64,
    cfg: &SolveConfig,
    iters: &mut usize,
) -> CenterOutcome {
    let nf = free.len() + s.is_some() as usize;
    if nf == 0 {
        return CenterOutcome::Converged;
    }

    let max_inner = 80usize;
    for _ in 0..max_inner {
        if *iters >= cfg.max_newton {
            return CenterOutcome::Diverged;
        }
        *iters += 1;
        let sv = s.as_deref().copied();
        let q = match assemble(c, node, free, z, sv, t) {
            Some(q) => q,
            None => return CenterOutcome::Diverged,
        };
        let d = newton_dir(&q.h, &q.g);

        let dec = -(q.g.dot(&d));
        if dec <= 1e-11 * q.psi.abs().max(1.0) {
            return CenterOutcome::Converged;
        }

        // Backtracking line search on psi, starting from a capped step.
        let dmax = d.amax();
        let alpha0 = if dmax > STEP_CAP { STEP_CAP / dmax } else { 1.0 };
        let mut alpha = alpha0;
        let mut accepted = false;
        while alpha > alpha0 * 1e-13 {
            let mut zt = z.to_vec();
            for (a, &fa) in free.iter().enumerate() {
                zt[fa] += alpha * d[a];
            }
            let st = sv.map(|v| v + alpha * d[nf - 1]);
            if let Some(p2) = psi_value(c, node, free, &zt, st, t) {
                if p2 <= q.psi - 0.25 * alpha * dec {
                    z.copy_from_slice(&zt);
                    if let (Some(slot), Some(v)) = (s.as_deref_mut(), st) {
                        *slot = v;
                    }
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            return CenterOutcome::Stalled;
        }
        if z.iter().any(|v| v.abs() > LOG_RANGE) {
            // Runaway iterates; let the caller classify unboundedness.
            return CenterOutcome::Converged;
        }
        // During phase 1 a successful step may already reach exit margin.
        if s.is_some() {
            if let Some(sref) = s.as_deref() {
                if *sref <= -FEAS_EXIT {
                    return CenterOutcome::Converged;
                }
            }
        }
    }
    CenterOutcome::Stalled
}

/// Newton iterations accepted on gradient-norm decrease, run at the final
/// `t` until the barrier gradient drops below `target`. Works where the
/// psi-based line search cannot: near the center the attainable decrease in
/// `psi_t` is below the floating-point resolution of its huge magnitude,
/// while the gradient norm remains well scaled all the way down.
#[allow(clippy::too_many_arguments)]
fn polish_duals(
    c: &Compiled,
    node: &NodeBox,
    free: &[usize],
    z: &mut [f64],
    t: f64,
    target: f64,
    cfg: &SolveConfig,
    iters: &mut usize,
) {
    if free.is_empty() {
        return;
    }
    for _ in 0..40 {
        if *iters >= cfg.max_newton {
            return;
        }
        let q = match assemble(c, node, free, z, None, t) {
            Some(q) => q,
            None => return,
        };
        let gn0 = q.g.amax();
        if gn0 <= target {
            return;
        }
        *iters += 1;
        let d = newton_dir(&q.h, &q.g);
        let dmax = d.amax();
        let alpha0 = if dmax > STEP_CAP { STEP_CAP / dmax } else { 1.0 };
        let mut alpha = alpha0;
        let mut moved = false;
        while alpha > alpha0 * 1e-12 {
            let mut zt = z.to_vec();
            for (a, &fa) in free.iter().enumerate() {
                zt[fa] += alpha * d[a];
            }
            if let Some(q2) = assemble(c, node, free, &zt, None, t) {
                if q2.g.amax() < gn0 {
                    z.copy_from_slice(&zt);
                    moved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !moved {
            return;
        }
    }
}
