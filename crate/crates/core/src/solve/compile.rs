//! Translation of a lowered problem into smooth log-space form.
//!
//! Monomial equalities are affine in log space. They are removed by
//! Gaussian elimination: each equality donates one continuous pivot
//! variable which is substituted out of every expression, so the barrier
//! method only ever sees smooth inequalities over a reduced variable
//! vector `z`. Integer variables are never chosen as pivots — branch and
//! bound needs them present in the solve space.

use std::collections::BTreeMap;

use crate::expr::{Expr, Monomial, VarKind};
use crate::solve::lower::Lowered;
use crate::solve::{Problem, SolveConfig, SolveError};

/// Sparse affine form `b + sum a_j z_j` over the reduced variables.
#[derive(Debug, Clone)]
pub(crate) struct Aff {
    pub b: f64,
    pub a: Vec<(u32, f64)>,
}

impl Aff {
    pub fn value(&self, z: &[f64]) -> f64 {
        let mut acc = self.b;
        for &(j, c) in &self.a {
            acc += c * z[j as usize];
        }
        acc
    }
}

/// Smooth convex function of `z`; the log-space image of a max-free
/// expression.
#[derive(Debug, Clone)]
pub(crate) enum SmoothExpr {
    /// `b + a . z`
    Affine(Aff),
    /// `log sum_k exp(b_k + a_k . z)`
    Lse(Vec<Aff>),
    /// `lin(z) + exp(arg(z))`
    ExpAff { lin: Aff, arg: Aff },
    /// `p * inner(z)` with `p > 0`
    Scaled(f64, Box<SmoothExpr>),
}

/// One inequality row `f(z) <= 0` with a back-reference into the lowered
/// inequality list.
#[derive(Debug, Clone)]
pub(crate) struct CRow {
    /// Index into `Lowered::ineqs`; `None` for rows synthesized here
    /// (bound constraints on eliminated variables).
    pub source: Option<usize>,
    pub f: SmoothExpr,
}

/// How each original (lowered) variable maps into the reduced space.
#[derive(Debug, Clone)]
pub(crate) enum VarMap {
    Keep(u32),
    /// `u = alpha + sum beta_j z_j`
    Elim { alpha: f64, beta: Vec<(u32, f64)> },
}

pub(crate) struct Compiled {
    /// Reduced dimension.
    pub nz: usize,
    pub map: Vec<VarMap>,
    /// For each reduced index, the lowered variable id it represents.
    pub keep: Vec<u32>,
    pub objective: SmoothExpr,
    pub rows: Vec<CRow>,
    /// Log-space box bounds for the reduced variables (hints and integer
    /// ranges); infinite when absent.
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Reduced indices of integer variables, ascending.
    pub int_z: Vec<u32>,
}

impl Compiled {
    /// Reconstructs the full lowered-variable log vector from `z`.
    pub fn recover_u(&self, z: &[f64]) -> Vec<f64> {
        self.map
            .iter()
            .map(|m| match m {
                VarMap::Keep(j) => z[*j as usize],
                VarMap::Elim { alpha, beta } => {
                    let mut v = *alpha;
                    for &(j, c) in beta {
                        v += c * z[j as usize];
                    }
                    v
                }
            })
            .collect()
    }
}

pub(crate) enum CompileOutcome {
    Ok(Compiled),
    /// The equality system is inconsistent on its own.
    Infeasible,
}

pub(crate) fn compile(
    l: &Lowered,
    p: &Problem,
    cfg: &SolveConfig,
) -> Result<CompileOutcome, SolveError> {
    let n = l.vars.len();

    // Equality system A u = b in log space.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(l.eqs.len());
    for eq in &l.eqs {
        let mut a = vec![0.0; n];
        for &(id, e) in eq.mono.exponents() {
            a[id.index()] = e;
        }
        rows.push((a, -eq.mono.coeff().ln()));
    }

    // Reduced row echelon form with partial pivoting over continuous
    // columns only.
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col)
    let mut is_pivot_col = vec![false; n];
    let nrows = rows.len();
    for r in 0..nrows {
        let (best_col, best_abs) = {
            let a = &rows[r].0;
            let mut bc = None;
            let mut ba = 0.0;
            for (j, &c) in a.iter().enumerate() {
                if is_pivot_col[j] || l.vars.kind(crate::expr::VarId(j as u32)) == VarKind::Integer
                {
                    continue;
                }
                if c.abs() > ba + 1e-15 {
                    ba = c.abs();
                    bc = Some(j);
                }
            }
            (bc, ba)
        };
        let scale: f64 = rows[r].0.iter().map(|c| c.abs()).fold(0.0, f64::max);
        if best_abs <= 1e-10 * scale.max(1.0) || best_col.is_none() {
            // No usable continuous coefficient left in this row.
            let int_part: f64 = rows[r]
                .0
                .iter()
                .enumerate()
                .filter(|(j, _)| l.vars.kind(crate::expr::VarId(*j as u32)) == VarKind::Integer)
                .map(|(_, c)| c.abs())
                .fold(0.0, f64::max);
            if int_part > 1e-10 {
                return Err(SolveError::UnsupportedEquality(
                    "a monomial equality constrains only integer variables".into(),
                ));
            }
            if rows[r].1.abs() > 1e-9 {
                return Ok(CompileOutcome::Infeasible);
            }
            continue; // redundant row
        }
        let col = best_col.unwrap();
        // Normalize and eliminate from every other row.
        let piv = rows[r].0[col];
        for c in rows[r].0.iter_mut() {
            *c /= piv;
        }
        rows[r].1 /= piv;
        let prow = rows[r].clone();
        for (r2, row2) in rows.iter_mut().enumerate() {
            if r2 == r {
                continue;
            }
            let f = row2.0[col];
            if f != 0.0 {
                for j in 0..n {
                    row2.0[j] -= f * prow.0[j];
                }
                row2.1 -= f * prow.1;
                row2.0[col] = 0.0;
            }
        }
        pivots.push((r, col));
        is_pivot_col[col] = true;
    }

    // Reduced variable numbering over the kept columns.
    let mut z_of = vec![None; n];
    let mut keep = Vec::new();
    for j in 0..n {
        if !is_pivot_col[j] {
            z_of[j] = Some(keep.len() as u32);
            keep.push(j as u32);
        }
    }
    let nz = keep.len();

    let mut map: Vec<VarMap> = Vec::with_capacity(n);
    for j in 0..n {
        if let Some(zj) = z_of[j] {
            map.push(VarMap::Keep(zj));
        } else {
            let &(r, _) = pivots.iter().find(|&&(_, c)| c == j).expect("pivot exists");
            let (a, b) = &rows[r];
            let beta: Vec<(u32, f64)> = (0..n)
                .filter(|&k| k != j && a[k] != 0.0)
                .map(|k| {
                    let zk = z_of[k].expect("non-pivot columns remain after RREF");
                    (zk, -a[k])
                })
                .collect();
            map.push(VarMap::Elim { alpha: *b, beta });
        }
    }

    let subst = |m: &Monomial| -> Aff { aff_of_mono(m, &map) };

    let objective = smooth_of_expr(&l.objective, &map);
    let mut crows: Vec<CRow> = l
        .ineqs
        .iter()
        .enumerate()
        .map(|(i, row)| CRow { source: Some(i), f: smooth_of_expr(&row.expr, &map) })
        .collect();

    // Box bounds for kept variables; bound rows for eliminated ones.
    let mut lo = vec![f64::NEG_INFINITY; nz];
    let mut hi = vec![f64::INFINITY; nz];
    for (&id, &(blo, bhi)) in &p.bounds {
        match &map[id.index()] {
            VarMap::Keep(zj) => {
                lo[*zj as usize] = blo.ln();
                hi[*zj as usize] = bhi.ln();
            }
            VarMap::Elim { .. } => {
                let aff = subst(&Monomial::var(id));
                // ln lo <= aff <= ln hi as two affine rows.
                let mut upper = aff.clone();
                upper.b -= bhi.ln();
                crows.push(CRow { source: None, f: SmoothExpr::Affine(upper) });
                let mut lower = Aff {
                    b: blo.ln() - aff.b,
                    a: aff.a.iter().map(|&(j, c)| (j, -c)).collect(),
                };
                lower.a.sort_by_key(|&(j, _)| j);
                crows.push(CRow { source: None, f: SmoothExpr::Affine(lower) });
            }
        }
    }

    // Integer variables: keep them >= 1 and give them a finite search
    // range for branch and bound.
    let mut int_z = Vec::new();
    for id in l.vars.ids() {
        if l.vars.kind(id) == VarKind::Integer {
            let VarMap::Keep(zj) = map[id.index()] else {
                unreachable!("integer variables are never eliminated")
            };
            let j = zj as usize;
            lo[j] = lo[j].max(0.0);
            if !hi[j].is_finite() {
                hi[j] = cfg.integer_upper_default.ln();
            }
            int_z.push(zj);
        }
    }
    int_z.sort_unstable();

    Ok(CompileOutcome::Ok(Compiled {
        nz,
        map,
        keep,
        objective,
        rows: crows,
        lo,
        hi,
        int_z,
    }))
}

fn aff_of_mono(m: &Monomial, map: &[VarMap]) -> Aff {
    let mut b = m.coeff().ln();
    let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
    for &(id, e) in m.exponents() {
        match &map[id.index()] {
            VarMap::Keep(zj) => *acc.entry(*zj).or_insert(0.0) += e,
            VarMap::Elim { alpha, beta } => {
                b += e * alpha;
                for &(zj, c) in beta {
                    *acc.entry(zj).or_insert(0.0) += e * c;
                }
            }
        }
    }
    let a: Vec<(u32, f64)> = acc.into_iter().filter(|&(_, c)| c != 0.0).collect();
    Aff { b, a }
}

fn smooth_of_expr(e: &Expr, map: &[VarMap]) -> SmoothExpr {
    match e {
        Expr::Mono(m) => SmoothExpr::Affine(aff_of_mono(m, map)),
        Expr::Posy(p) => SmoothExpr::Lse(p.terms().iter().map(|t| aff_of_mono(t, map)).collect()),
        Expr::ExpMono { scale, inner } => SmoothExpr::ExpAff {
            lin: aff_of_mono(scale, map),
            arg: aff_of_mono(inner, map),
        },
        Expr::Power(b, p) => SmoothExpr::Scaled(*p, Box::new(smooth_of_expr(b, map))),
        Expr::Max(_) => unreachable!("max atoms are lowered before compilation"),
    }
}

impl SmoothExpr {
    pub fn value(&self, z: &[f64]) -> f64 {
        match self {
            SmoothExpr::Affine(a) => a.value(z),
            SmoothExpr::Lse(terms) => {
                crate::expr::log_sum_exp(terms.iter().map(|t| t.value(z)))
            }
            SmoothExpr::ExpAff { lin, arg } => lin.value(z) + arg.value(z).exp(),
            SmoothExpr::Scaled(p, inner) => p * inner.value(z),
        }
    }

    /// Value plus sparse gradient (sorted by index, merged).
    pub fn value_grad(&self, z: &[f64]) -> (f64, Vec<(u32, f64)>) {
        match self {
            SmoothExpr::Affine(a) => (a.value(z), a.a.clone()),
            SmoothExpr::Lse(terms) => {
                let vals: Vec<f64> = terms.iter().map(|t| t.value(z)).collect();
                let f = crate::expr::log_sum_exp(vals.iter().copied());
                let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
                for (t, &v) in terms.iter().zip(&vals) {
                    let w = (v - f).exp();
                    for &(j, c) in &t.a {
                        *acc.entry(j).or_insert(0.0) += w * c;
                    }
                }
                (f, acc.into_iter().collect())
            }
            SmoothExpr::ExpAff { lin, arg } => {
                let ev = arg.value(z).exp();
                let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
                for &(j, c) in &lin.a {
                    *acc.entry(j).or_insert(0.0) += c;
                }
                for &(j, c) in &arg.a {
                    *acc.entry(j).or_insert(0.0) += ev * c;
                }
                (lin.value(z) + ev, acc.into_iter().collect())
            }
            SmoothExpr::Scaled(p, inner) => {
                let (v, mut g) = inner.value_grad(z);
                for e in g.iter_mut() {
                    e.1 *= p;
                }
                (p * v, g)
            }
        }
    }

    /// Adds `w * hess(self)(z)` into the dense matrix.
    pub fn add_hess(&self, z: &[f64], w: f64, h: &mut nalgebra::DMatrix<f64>) {
        match self {
            SmoothExpr::Affine(_) => {}
            SmoothExpr::Lse(terms) => {
                let vals: Vec<f64> = terms.iter().map(|t| t.value(z)).collect();
                let f = crate::expr::log_sum_exp(vals.iter().copied());
                let mut gbar: BTreeMap<u32, f64> = BTreeMap::new();
                for (t, &v) in terms.iter().zip(&vals) {
                    let wt = (v - f).exp();
                    add_outer(h, &t.a, w * wt);
                    for &(j, c) in &t.a {
                        *gbar.entry(j).or_insert(0.0) += wt * c;
                    }
                }
                let gv: Vec<(u32, f64)> = gbar.into_iter().collect();
                add_outer(h, &gv, -w);
            }
            SmoothExpr::ExpAff { arg, .. } => {
                let ev = arg.value(z).exp();
                add_outer(h, &arg.a, w * ev);
            }
            SmoothExpr::Scaled(p, inner) => inner.add_hess(z, w * p, h),
        }
    }
}

fn add_outer(h: &mut nalgebra::DMatrix<f64>, a: &[(u32, f64)], w: f64) {
    for &(i, ci) in a {
        for &(j, cj) in a {
            h[(i as usize, j as usize)] += w * ci * cj;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Constraint, Posynomial, VarSet};
    use crate::solve::lower;

    #[test]
    fn equality_elimination_substitutes_the_pivot() {
        // y = 2 x (monomial equality 0.5 y / x = 1); objective x + y should
        // compile to a one-variable problem.
        let mut vs = VarSet::new();
        let x = vs.var("x");
        let y = vs.var("y");
        let obj = Posynomial::new(vec![Monomial::var(x), Monomial::var(y)]).unwrap();
        let mut p = Problem::new(vs, obj);
        p.add(Constraint::eq1(
            "link",
            Monomial::new(0.5, [(y, 1.0), (x, -1.0)]).unwrap(),
        ));
        let l = lower::lower(&p).unwrap();
        let CompileOutcome::Ok(c) = compile(&l, &p, &SolveConfig::default()).unwrap() else {
            panic!("expected successful compile");
        };
        assert_eq!(c.nz, 1);
        // Recover both variables from a point: u_kept = ln 3.
        let u = c.recover_u(&[3.0f64.ln()]);
        let vals: Vec<f64> = u.iter().map(|v| v.exp()).collect();
        // One of x, y was eliminated; whichever it is, y = 2x must hold.
        assert!((vals[1] - 2.0 * vals[0]).abs() < 1e-12);
    }

    #[test]
    fn integer_vars_are_never_pivots() {
        let mut vs = VarSet::new();
        let n = vs.int_var("n");
        let x = vs.var("x");
        let mut p = Problem::new(vs, Monomial::var(x));
        // n x = 4
        p.add(Constraint::eq1(
            "link",
            Monomial::new(0.25, [(n, 1.0), (x, 1.0)]).unwrap(),
        ));
        let l = lower::lower(&p).unwrap();
        let CompileOutcome::Ok(c) = compile(&l, &p, &SolveConfig::default()).unwrap() else {
            panic!("expected successful compile")
        };
        assert_eq!(c.int_z.len(), 1);
        let kept_id = c.keep[c.int_z[0] as usize];
        assert_eq!(kept_id, n.0);
    }

    #[test]
    fn inconsistent_equalities_detected() {
        let mut vs = VarSet::new();
        let x = vs.var("x");
        let mut p = Problem::new(vs, Monomial::var(x));
        p.add(Constraint::eq1("a", Monomial::new(0.5, [(x, 1.0)]).unwrap()));
        p.add(Constraint::eq1("b", Monomial::new(0.25, [(x, 1.0)]).unwrap()));
        let l = lower::lower(&p).unwrap();
        assert!(matches!(
            compile(&l, &p, &SolveConfig::default()).unwrap(),
            CompileOutcome::Infeasible
        ));
    }

    #[test]
    fn smooth_values_match_expression_values() {
        let mut vs = VarSet::new();
        let a = vs.var("a");
        let b = vs.var("b");
        let e: Expr = Posynomial::new(vec![
            Monomial::new(2.0, [(a, 1.0), (b, -1.0)]).unwrap(),
            Monomial::new(0.3, [(b, 2.0)]).unwrap(),
        ])
        .unwrap()
        .into();
        let p = Problem::new(vs, e.clone());
        let l = lower::lower(&p).unwrap();
        let CompileOutcome::Ok(c) = compile(&l, &p, &SolveConfig::default()).unwrap() else {
            panic!()
        };
        let u = [0.4, -0.9];
        assert!((c.objective.value(&u) - e.log_eval(&u)).abs() < 1e-12);
        let (_, g) = c.objective.value_grad(&u);
        let mut gd = vec![0.0; 2];
        e.log_grad(&u, &mut gd).unwrap();
        for (j, cv) in g {
            assert!((cv - gd[j as usize]).abs() < 1e-12);
        }
    }
}
