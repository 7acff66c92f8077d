//! Lowering of `max` atoms.
//!
//! In the constraint grammar a `max` can only appear at the top of a
//! constraint expression or nested under further `max`/power nodes, so
//! `max(f, g) <= 1` decomposes exactly into `f <= 1, g <= 1` without
//! auxiliary variables. A `max` in the objective gets the classic epigraph
//! treatment: minimize a fresh variable `t` subject to every branch
//! `<= t`.

use crate::expr::{ConstraintForm, Expr, Monomial, VarSet};
use crate::solve::{Problem, SolveError};

/// One lowered inequality `expr <= 1` with a back-reference to the
/// constraint it came from (`None` for rows created by lowering the
/// objective).
pub(crate) struct LRow {
    pub source: Option<usize>,
    pub expr: Expr,
}

pub(crate) struct LEq {
    #[allow(dead_code)]
    pub source: usize,
    pub mono: Monomial,
}

pub(crate) struct Lowered {
    pub vars: VarSet,
    pub objective: Expr,
    pub ineqs: Vec<LRow>,
    pub eqs: Vec<LEq>,
}

pub(crate) fn lower(p: &Problem) -> Result<Lowered, SolveError> {
    let mut vars = p.vars.clone();
    let mut ineqs = Vec::new();
    let mut eqs = Vec::new();

    for (i, c) in p.constraints.iter().enumerate() {
        match &c.form {
            ConstraintForm::PosyLe1(f) => {
                for e in branches(f) {
                    ineqs.push(LRow { source: Some(i), expr: e });
                }
            }
            ConstraintForm::MonoEq1(m) => eqs.push(LEq { source: i, mono: m.clone() }),
            ConstraintForm::MonoGe(m, c0) => {
                // m >= c  <=>  c / m <= 1.
                let e = m
                    .recip()
                    .scale(*c0)
                    .map_err(|e| SolveError::BadProblem(e.to_string()))?;
                ineqs.push(LRow { source: Some(i), expr: Expr::Mono(e) });
            }
        }
    }

    let objective = if p.objective.is_max_free() {
        p.objective.clone()
    } else {
        // Epigraph: minimize t with every branch of the objective <= t.
        let t = vars.var("_epi");
        let t_inv = Monomial::var(t).recip();
        for e in branches(&p.objective) {
            ineqs.push(LRow { source: None, expr: e.mul_mono(&t_inv) });
        }
        Expr::Mono(Monomial::var(t))
    };

    Ok(Lowered { vars, objective, ineqs, eqs })
}

/// Splits an expression into the max-free branches whose pointwise maximum
/// it equals.
fn branches(e: &Expr) -> Vec<Expr> {
    match e {
        Expr::Max(bs) => bs.iter().flat_map(branches).collect(),
        Expr::Power(b, p) => branches(b)
            .into_iter()
            .map(|x| Expr::Power(Box::new(x), *p))
            .collect(),
        other => vec![other.clone()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Constraint, Posynomial, VarSet};

    #[test]
    fn max_constraint_decomposes_per_branch() {
        let mut vs = VarSet::new();
        let a = vs.var("a");
        let b = vs.var("b");
        let mx = Expr::max(vec![
            Monomial::var(a).into(),
            Posynomial::new(vec![Monomial::var(b), Monomial::constant(0.5)])
                .unwrap()
                .into(),
        ])
        .unwrap();
        let mut p = Problem::new(vs, Monomial::var(a));
        p.add(Constraint::le1("m", mx));
        let l = lower(&p).unwrap();
        assert_eq!(l.ineqs.len(), 2);
        assert!(l.ineqs.iter().all(|r| r.source == Some(0)));
        assert!(l.ineqs.iter().all(|r| r.expr.is_max_free()));
    }

    #[test]
    fn nested_max_under_power_decomposes() {
        let mut vs = VarSet::new();
        let a = vs.var("a");
        let b = vs.var("b");
        let mx = Expr::power(
            Expr::max(vec![Monomial::var(a).into(), Monomial::var(b).into()]).unwrap(),
            2.0,
        )
        .unwrap();
        let mut p = Problem::new(vs, Monomial::var(a));
        p.add(Constraint::le1("m", mx));
        let l = lower(&p).unwrap();
        assert_eq!(l.ineqs.len(), 2);
        // (max(a,b))^2 <= 1 became a^2 <= 1 and b^2 <= 1.
        let x = [0.9, 1.2];
        let vals: Vec<f64> = l.ineqs.iter().map(|r| r.expr.eval(&x).unwrap()).collect();
        assert!((vals[0] - 0.81).abs() < 1e-12);
        assert!((vals[1] - 1.44).abs() < 1e-12);
    }

    #[test]
    fn max_objective_gets_epigraph_variable() {
        let mut vs = VarSet::new();
        let a = vs.var("a");
        let b = vs.var("b");
        let obj = Expr::max(vec![Monomial::var(a).into(), Monomial::var(b).into()]).unwrap();
        let p = Problem::new(vs, obj);
        let l = lower(&p).unwrap();
        assert_eq!(l.vars.len(), 3);
        assert_eq!(l.ineqs.len(), 2);
        assert!(l.ineqs.iter().all(|r| r.source.is_none()));
        assert!(matches!(l.objective, Expr::Mono(_)));
    }
}
