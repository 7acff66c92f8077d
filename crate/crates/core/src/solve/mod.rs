//! Interior-point solver for log-convex programs with branch and bound for
//! integer variables.
//!
//! A [`Problem`] is stated over positive variables:
//!
//! ```text
//!     minimize    f0(x)
//!     subject to  f_i(x) <= 1        (log-convex f_i)
//!                 m_j(x)  = 1        (monomial m_j)
//!                 x_k    >= 1, integer   (integer variables)
//! ```
//!
//! The solve pipeline is
//!
//! 1. lower `max` atoms to per-branch inequality rows ([`lower`]),
//! 2. eliminate monomial equalities — affine in log space — by Gaussian
//!    elimination and substitution, leaving a smooth inequality-only
//!    problem in a reduced variable space ([`compile`]),
//! 3. solve the continuous relaxation with a primal log-barrier method:
//!    phase 1 minimizes the worst constraint value to find a strictly
//!    feasible start, phase 2 follows the central path with damped Newton
//!    steps and backtracking line search ([`barrier`]),
//! 4. branch and bound over the integer variables: best-bound node
//!    selection, most-fractional branching, incumbent seeding by rounding
//!    the relaxation up and re-solving with integers fixed ([`bnb`]).
//!
//! The solver is deterministic: identical inputs produce identical
//! iterates, node orders and solutions. No randomness is used anywhere in
//! the solve path.

mod barrier;
mod bnb;
mod compile;
mod lower;

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Constraint, ConstraintForm, Expr, ExprError, VarId, VarSet};

/// A mixed-integer log-convex program.
#[derive(Debug, Clone)]
pub struct Problem {
    pub vars: VarSet,
    pub objective: Expr,
    pub constraints: Vec<Constraint>,
    /// Optional positive bounds per variable, used as solver hints (initial
    /// point, trust region) and as the integer search range.
    pub bounds: BTreeMap<VarId, (f64, f64)>,
}

impl Problem {
    pub fn new(vars: VarSet, objective: impl Into<Expr>) -> Self {
        Self {
            vars,
            objective: objective.into(),
            constraints: Vec::new(),
            bounds: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn extend(&mut self, cs: impl IntoIterator<Item = Constraint>) {
        self.constraints.extend(cs);
    }

    pub fn set_bounds(&mut self, id: VarId, lo: f64, hi: f64) {
        assert!(lo > 0.0 && hi >= lo, "bounds must satisfy 0 < lo <= hi");
        self.bounds.insert(id, (lo, hi));
    }

    /// Largest relative violation over all constraints at `x`.
    pub fn max_violation(&self, x: &[f64]) -> Result<f64, ExprError> {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            worst = worst.max(c.violation(x)?);
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::IterationLimit => "iteration-limit",
        };
        f.write_str(s)
    }
}

/// Result of a solve. For non-optimal statuses `x` may be empty and the
/// objective is `NaN` unless an incumbent was found before the limit hit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Solution {
    pub status: Status,
    /// Values of the problem variables (original space, positive).
    pub x: Vec<f64>,
    pub objective: f64,
    pub log_objective: f64,
    /// One multiplier per constraint of the input problem; rows derived
    /// from the same constraint (e.g. the branches of a lowered `max`) are
    /// aggregated by summation. Monomial equalities report zero.
    pub duals: Vec<f64>,
    /// Max-norm of the stationarity and complementarity residuals of the
    /// log-space problem at the returned point.
    pub kkt_residual: f64,
    pub newton_iterations: usize,
    /// Branch-and-bound nodes processed (zero for a pure relaxation).
    pub nodes: usize,
    /// Final relative integrality gap (zero for a pure relaxation).
    pub gap: f64,
    pub solve_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Feasibility tolerance on the original constraints (relative).
    pub feas_tol: f64,
    /// Target for the KKT residual of the log-space problem.
    pub kkt_tol: f64,
    /// Barrier duality-gap target per constraint (`m / t`).
    pub gap_tol: f64,
    /// Relative integrality gap at which branch and bound stops.
    pub int_gap: f64,
    /// Total damped-Newton iteration budget per continuous solve.
    pub max_newton: usize,
    /// Branch-and-bound node budget.
    pub max_nodes: usize,
    /// Barrier parameter multiplier between centering steps.
    pub mu: f64,
    /// Integer search range used when a variable has no explicit bounds.
    pub integer_upper_default: f64,
    /// After the gap closes, try to reduce each integer variable in id
    /// order while the objective stays within the gap tolerance. Makes the
    /// reported integers a deterministic representative of tied optima.
    pub polish_ties: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            feas_tol: 1e-8,
            kkt_tol: 1e-8,
            gap_tol: 1e-10,
            int_gap: 1e-6,
            max_newton: 4000,
            max_nodes: 20_000,
            mu: 20.0,
            integer_upper_default: 16.0,
            polish_ties: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("expression error: {0}")]
    Expr(#[from] ExprError),
    #[error("unsupported equality: {0}")]
    UnsupportedEquality(String),
    #[error("numerical trouble: {0}")]
    Numerical(String),
    #[error("malformed problem: {0}")]
    BadProblem(String),
}

/// Solves the continuous relaxation (integer variables only keep their
/// `>= 1` bound).
pub fn solve_relaxation(p: &Problem, cfg: &SolveConfig) -> Result<Solution, SolveError> {
    let t0 = Instant::now();
    let lowered = lower::lower(p)?;
    let comp = compile::compile(&lowered, p, cfg)?;
    let comp = match comp {
        compile::CompileOutcome::Ok(c) => c,
        compile::CompileOutcome::Infeasible => {
            return Ok(infeasible_solution(p, t0));
        }
    };
    let node = barrier::NodeBox::root(&comp);
    let res = barrier::solve_continuous(&comp, &node, cfg);
    Ok(finish_continuous(p, &lowered, &comp, res, t0))
}

/// Solves the mixed-integer program by branch and bound.
pub fn solve_migp(p: &Problem, cfg: &SolveConfig) -> Result<Solution, SolveError> {
    let t0 = Instant::now();
    let lowered = lower::lower(p)?;
    let comp = compile::compile(&lowered, p, cfg)?;
    let comp = match comp {
        compile::CompileOutcome::Ok(c) => c,
        compile::CompileOutcome::Infeasible => {
            return Ok(infeasible_solution(p, t0));
        }
    };
    if comp.int_z.is_empty() {
        let node = barrier::NodeBox::root(&comp);
        let res = barrier::solve_continuous(&comp, &node, cfg);
        return Ok(finish_continuous(p, &lowered, &comp, res, t0));
    }
    let out = bnb::branch_and_bound(&comp, cfg);
    Ok(finish_bnb(p, &lowered, &comp, out, t0))
}

/// Stationarity/complementarity residual of the log-space problem at a
/// solution, recomputed from scratch in the original variable space. The
/// stationarity part is projected onto the tangent space of the monomial
/// equalities.
pub fn kkt_residual(p: &Problem, sol: &Solution) -> Result<f64, SolveError> {
    use nalgebra::{DMatrix, DVector};
    if sol.x.len() != p.vars.len() {
        return Err(SolveError::BadProblem(format!(
            "solution has {} values for {} variables",
            sol.x.len(),
            p.vars.len()
        )));
    }
    let n = p.vars.len();
    let u: Vec<f64> = sol.x.iter().map(|v| v.ln()).collect();
    let mut stat = DVector::zeros(n);
    {
        let mut g = vec![0.0; n];
        p.objective.log_grad(&u, &mut g)?;
        for j in 0..n {
            stat[j] += g[j];
        }
    }
    let mut comp_res: f64 = 0.0;
    let mut eq_rows: Vec<Vec<f64>> = Vec::new();
    for (i, c) in p.constraints.iter().enumerate() {
        match &c.form {
            ConstraintForm::MonoEq1(m) => {
                let mut row = vec![0.0; n];
                for &(id, e) in m.exponents() {
                    row[id.index()] = e;
                }
                eq_rows.push(row);
            }
            ConstraintForm::PosyLe1(f) => {
                let lam = sol.duals.get(i).copied().unwrap_or(0.0);
                let fv = f.log_eval(&u);
                comp_res = comp_res.max((lam * fv).abs());
                if lam != 0.0 {
                    let mut g = vec![0.0; n];
                    // `max` constraints aggregate their branch duals; use the
                    // active branch's gradient.
                    active_grad(f, &u, &mut g)?;
                    for j in 0..n {
                        stat[j] += lam * g[j];
                    }
                }
            }
            ConstraintForm::MonoGe(m, cb) => {
                let lam = sol.duals.get(i).copied().unwrap_or(0.0);
                let fv = cb.ln() - m.log_eval(&u);
                comp_res = comp_res.max((lam * fv).abs());
                if lam != 0.0 {
                    for &(id, e) in m.exponents() {
                        stat[id.index()] -= lam * e;
                    }
                }
            }
        }
    }
    if !eq_rows.is_empty() {
        // Project out the equality normals: r <- (I - A^T (A A^T)^+ A) r.
        let a = DMatrix::from_fn(eq_rows.len(), n, |i, j| eq_rows[i][j]);
        let aat = &a * a.transpose();
        if let Some(chol) = aat.clone().cholesky() {
            let ar = &a * &stat;
            let w = chol.solve(&ar);
            stat -= a.transpose() * w;
        } else {
            let svd = a.clone().svd(true, true);
            if let Ok(pinv) = svd.pseudo_inverse(1e-12) {
                let ar = &a * &stat;
                stat -= pinv * ar;
            }
        }
    }
    Ok(stat.amax().max(comp_res))
}

/// Gradient of `f` at `u` treating `max` as its active branch (ties use the
/// first maximizer, which is immaterial for residual reporting).
fn active_grad(f: &Expr, u: &[f64], out: &mut [f64]) -> Result<(), ExprError> {
    match f {
        Expr::Max(bs) => {
            let mut best = f64::NEG_INFINITY;
            let mut pick = 0;
            for (k, b) in bs.iter().enumerate() {
                let v = b.log_eval(u);
                if v > best {
                    best = v;
                    pick = k;
                }
            }
            active_grad(&bs[pick], u, out)
        }
        Expr::Power(b, p) => {
            let mut inner = vec![0.0; out.len()];
            active_grad(b, u, &mut inner)?;
            for (o, g) in out.iter_mut().zip(&inner) {
                *o += p * g;
            }
            Ok(())
        }
        other => other.log_grad(u, out),
    }
}

fn infeasible_solution(p: &Problem, t0: Instant) -> Solution {
    Solution {
        status: Status::Infeasible,
        x: Vec::new(),
        objective: f64::NAN,
        log_objective: f64::NAN,
        duals: vec![0.0; p.constraints.len()],
        kkt_residual: f64::NAN,
        newton_iterations: 0,
        nodes: 0,
        gap: 0.0,
        solve_seconds: t0.elapsed().as_secs_f64(),
    }
}

fn finish_continuous(
    p: &Problem,
    lowered: &lower::Lowered,
    comp: &compile::Compiled,
    res: barrier::ContResult,
    t0: Instant,
) -> Solution {
    let status = match res.status {
        barrier::ContStatus::Optimal => Status::Optimal,
        barrier::ContStatus::Infeasible => Status::Infeasible,
        barrier::ContStatus::Unbounded => Status::Unbounded,
        barrier::ContStatus::IterLimit => Status::IterationLimit,
    };
    let mut sol = infeasible_solution(p, t0);
    sol.status = status;
    sol.newton_iterations = res.newton_iters;
    if status == Status::Optimal {
        let u = comp.recover_u(&res.z);
        let x: Vec<f64> = u[..p.vars.len()].iter().map(|v| v.exp()).collect();
        sol.objective = p
            .objective
            .eval(&x)
            .unwrap_or(f64::NAN);
        sol.log_objective = sol.objective.ln();
        sol.duals = aggregate_duals(p, lowered, comp, &res.duals);
        sol.kkt_residual = res.kkt;
        sol.x = x;
    }
    sol.solve_seconds = t0.elapsed().as_secs_f64();
    sol
}

fn finish_bnb(
    p: &Problem,
    lowered: &lower::Lowered,
    comp: &compile::Compiled,
    out: bnb::BnbResult,
    t0: Instant,
) -> Solution {
    let mut sol = infeasible_solution(p, t0);
    sol.status = out.status;
    sol.nodes = out.nodes;
    sol.newton_iterations = out.newton_iters;
    sol.gap = out.gap;
    if let Some(inc) = out.incumbent {
        let u = comp.recover_u(&inc.z);
        let x: Vec<f64> = u[..p.vars.len()].iter().map(|v| v.exp()).collect();
        sol.objective = p.objective.eval(&x).unwrap_or(f64::NAN);
        sol.log_objective = sol.objective.ln();
        sol.duals = aggregate_duals(p, lowered, comp, &inc.duals);
        sol.kkt_residual = inc.kkt;
        sol.x = x;
    }
    sol.solve_seconds = t0.elapsed().as_secs_f64();
    sol
}

fn aggregate_duals(
    p: &Problem,
    lowered: &lower::Lowered,
    comp: &compile::Compiled,
    row_duals: &[f64],
) -> Vec<f64> {
    let mut duals = vec![0.0; p.constraints.len()];
    for (r, lam) in comp.rows.iter().zip(row_duals) {
        if let Some(row_idx) = r.source {
            if let Some(orig) = lowered.ineqs[row_idx].source {
                duals[orig] += lam;
            }
        }
    }
    duals
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Monomial, Posynomial};

    /// Small smoke test; thorough coverage lives in the integration tests.
    #[test]
    fn minimizes_a_monomial_against_a_lower_bound() {
        let mut vs = VarSet::new();
        let x = vs.var("x");
        let mut p = Problem::new(vs, Monomial::var(x));
        p.add(Constraint::ge("floor", Monomial::var(x), 3.0));
        let sol = solve_relaxation(&p, &SolveConfig::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.x[x.index()] - 3.0).abs() < 1e-6, "x = {}", sol.x[x.index()]);
    }

    #[test]
    fn detects_trivially_inconsistent_equalities() {
        let mut vs = VarSet::new();
        let x = vs.var("x");
        let mut p = Problem::new(vs, Monomial::var(x));
        // x = 2 and x = 3 cannot hold together.
        p.add(Constraint::eq1("a", Monomial::new(0.5, [(x, 1.0)]).unwrap()));
        p.add(Constraint::eq1("b", Monomial::new(1.0 / 3.0, [(x, 1.0)]).unwrap()));
        let sol = solve_relaxation(&p, &SolveConfig::default()).unwrap();
        assert_eq!(sol.status, Status::Infeasible);
    }

    #[test]
    fn unconstrained_decreasing_objective_is_unbounded() {
        let mut vs = VarSet::new();
        let x = vs.var("x");
        let p = Problem::new(vs, Monomial::var(x));
        let sol = solve_relaxation(&p, &SolveConfig::default()).unwrap();
        assert_eq!(sol.status, Status::Unbounded);
    }

    #[test]
    fn posynomial_objective_with_balance() {
        // min x + 1/x -> x = 1, objective 2.
        let mut vs = VarSet::new();
        let x = vs.var("x");
        let obj = Posynomial::new(vec![
            Monomial::var(x),
            Monomial::var(x).recip(),
        ])
        .unwrap();
        let p = Problem::new(vs, obj);
        let sol = solve_relaxation(&p, &SolveConfig::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-6);
        assert!((sol.objective - 2.0).abs() < 1e-8);
    }
}

