//! Positive-variable expressions that become convex under the log/log
//! change of variables.
//!
//! Every expression `f` maps strictly positive inputs to a strictly
//! positive value, and its log transform
//!
//! ```text
//!     F(u) = log f(exp u)
//! ```
//!
//! is convex. The grammar is deliberately small:
//!
//! * [`Monomial`] `c * prod x_j^{a_j}` with `c > 0` — affine in log space;
//! * [`Posynomial`] — a sum of monomials — log-sum-exp of affine forms;
//! * [`Expr::Max`] — pointwise maximum (convex, not smooth; the solver
//!   lowers it before differentiating);
//! * [`Expr::ExpMono`] `s(x) * exp(m(x))` for monomials `s`, `m` — used for
//!   constraints that mix a variable with its logarithm;
//! * [`Expr::Power`] `f^p` with `p > 0`.
//!
//! Variables are interned in a [`VarSet`] and referenced by [`VarId`];
//! expressions are immutable once built and can be shared freely across
//! constraints and branch-and-bound nodes.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a variable in its [`VarSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub u32);

impl VarId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// Continuous variables range over the positive reals; integer variables
/// additionally take integer values `>= 1` in a mixed-integer solve (the
/// continuous relaxation only keeps the `>= 1` part).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Integer,
}

/// Interning registry for variables.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct VarSet {
    names: Vec<String>,
    kinds: Vec<VarKind>,
}

impl VarSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id for `name`, creating the variable on first use.
    ///
    /// Panics if the variable exists with a different kind; a variable's
    /// kind is part of its identity and may not change after creation.
    pub fn intern(&mut self, name: &str, kind: VarKind) -> VarId {
        if let Some(id) = self.get(name) {
            assert_eq!(
                self.kinds[id.index()],
                kind,
                "variable {name:?} re-interned with a different kind"
            );
            return id;
        }
        let id = VarId(u32::try_from(self.names.len()).expect("too many variables"));
        self.names.push(name.to_owned());
        self.kinds.push(kind);
        id
    }

    /// Shorthand for interning a continuous variable.
    pub fn var(&mut self, name: &str) -> VarId {
        self.intern(name, VarKind::Continuous)
    }

    /// Shorthand for interning an integer variable.
    pub fn int_var(&mut self, name: &str) -> VarId {
        self.intern(name, VarKind::Integer)
    }

    pub fn get(&self, name: &str) -> Option<VarId> {
        self.names.iter().position(|n| n == name).map(|i| VarId(i as u32))
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.names[id.index()]
    }

    pub fn kind(&self, id: VarId) -> VarKind {
        self.kinds[id.index()]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> + '_ {
        (0..self.names.len() as u32).map(VarId)
    }

    pub fn integer_ids(&self) -> impl Iterator<Item = VarId> + '_ {
        self.ids().filter(|&id| self.kind(id) == VarKind::Integer)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ExprError {
    #[error("monomial coefficient must be positive and finite, got {0}")]
    BadCoefficient(f64),
    #[error("power exponent must be positive and finite, got {0}")]
    BadPower(f64),
    #[error("max() requires at least one branch")]
    EmptyMax,
    #[error("a posynomial requires at least one term")]
    EmptyPosynomial,
    #[error("variable {0} has non-positive value {1}")]
    NonPositiveValue(VarId, f64),
    #[error("assignment has {got} entries but expression references variable {var}")]
    AssignmentTooShort { got: usize, var: VarId },
    #[error("max() has no gradient; lower it to epigraph form before differentiating")]
    MaxNotSmooth,
}

/// `c * prod_j x_j^{a_j}` with `c > 0`. Exponent pairs are sorted by
/// variable id and never contain zeros or duplicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    coeff: f64,
    exps: Vec<(VarId, f64)>,
}

impl Monomial {
    pub fn new(coeff: f64, exps: impl IntoIterator<Item = (VarId, f64)>) -> Result<Self, ExprError> {
        if !(coeff > 0.0 && coeff.is_finite()) {
            return Err(ExprError::BadCoefficient(coeff));
        }
        let mut pairs: Vec<(VarId, f64)> = exps.into_iter().collect();
        pairs.sort_by_key(|&(id, _)| id);
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(pairs.len());
        for (id, e) in pairs {
            match merged.last_mut() {
                Some((last, acc)) if *last == id => *acc += e,
                _ => merged.push((id, e)),
            }
        }
        merged.retain(|&(_, e)| e != 0.0);
        Ok(Self { coeff, exps: merged })
    }

    pub fn constant(c: f64) -> Self {
        Self::new(c, []).expect("constant monomial requires c > 0")
    }

    pub fn var(id: VarId) -> Self {
        Self { coeff: 1.0, exps: vec![(id, 1.0)] }
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn exponents(&self) -> &[(VarId, f64)] {
        &self.exps
    }

    pub fn exponent_of(&self, id: VarId) -> f64 {
        self.exps
            .binary_search_by_key(&id, |&(v, _)| v)
            .map(|i| self.exps[i].1)
            .unwrap_or(0.0)
    }

    pub fn is_constant(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let exps = self.exps.iter().chain(&other.exps).copied();
        Self::new(self.coeff * other.coeff, exps).expect("product of positive coefficients")
    }

    pub fn div(&self, other: &Self) -> Self {
        self.mul(&other.recip())
    }

    pub fn recip(&self) -> Self {
        self.powf(-1.0)
    }

    /// `m^p`; any real `p` is allowed for monomials (the result is still a
    /// monomial because the coefficient stays positive).
    pub fn powf(&self, p: f64) -> Self {
        assert!(p.is_finite(), "monomial power must be finite");
        Self {
            coeff: self.coeff.powf(p),
            exps: if p == 0.0 {
                Vec::new()
            } else {
                self.exps.iter().map(|&(id, e)| (id, e * p)).collect()
            },
        }
    }

    pub fn scale(&self, k: f64) -> Result<Self, ExprError> {
        Self::new(self.coeff * k, self.exps.iter().copied())
    }

    /// Value at a positive point `x` (indexed by variable id).
    pub fn eval(&self, x: &[f64]) -> Result<f64, ExprError> {
        Ok(self.log_eval_checked(x)?.exp())
    }

    fn log_eval_checked(&self, x: &[f64]) -> Result<f64, ExprError> {
        let mut acc = self.coeff.ln();
        for &(id, e) in &self.exps {
            let v = *x
                .get(id.index())
                .ok_or(ExprError::AssignmentTooShort { got: x.len(), var: id })?;
            if !(v > 0.0) {
                return Err(ExprError::NonPositiveValue(id, v));
            }
            acc += e * v.ln();
        }
        Ok(acc)
    }

    /// `log m(exp u) = log c + a . u`, the affine log-space form.
    pub fn log_eval(&self, u: &[f64]) -> f64 {
        let mut acc = self.coeff.ln();
        for &(id, e) in &self.exps {
            acc += e * u[id.index()];
        }
        acc
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<VarId>) {
        out.extend(self.exps.iter().map(|&(id, _)| id));
    }

    pub fn display<'a>(&'a self, vars: &'a VarSet) -> impl fmt::Display + 'a {
        DisplayMono { m: self, vars }
    }
}

struct DisplayMono<'a> {
    m: &'a Monomial,
    vars: &'a VarSet,
}

impl fmt::Display for DisplayMono<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.m.exps.is_empty() || (self.m.coeff - 1.0).abs() > 1e-15 {
            write!(f, "{}", Sig(self.m.coeff))?;
            if !self.m.exps.is_empty() {
                write!(f, "*")?;
            }
        }
        for (i, &(id, e)) in self.m.exps.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write!(f, "{}", self.vars.name(id))?;
            if (e - 1.0).abs() > 1e-15 {
                write!(f, "^{}", Sig(e))?;
            }
        }
        Ok(())
    }
}

/// Compact float formatting for display impls.
struct Sig(f64);

impl fmt::Display for Sig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == self.0.trunc() && self.0.abs() < 1e10 {
            write!(f, "{}", self.0 as i64)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// A sum of monomials. Always non-empty; like terms are merged on
/// construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posynomial {
    terms: Vec<Monomial>,
}

impl Posynomial {
    pub fn new(terms: Vec<Monomial>) -> Result<Self, ExprError> {
        if terms.is_empty() {
            return Err(ExprError::EmptyPosynomial);
        }
        let mut sorted = terms;
        sorted.sort_by(|a, b| {
            a.exps
                .iter()
                .map(|&(id, e)| (id, ordered(e)))
                .cmp(b.exps.iter().map(|&(id, e)| (id, ordered(e))))
        });
        let mut merged: Vec<Monomial> = Vec::with_capacity(sorted.len());
        for t in sorted {
            match merged.last_mut() {
                Some(last) if last.exps == t.exps => last.coeff += t.coeff,
                _ => merged.push(t),
            }
        }
        Ok(Self { terms: merged })
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::new(terms).expect("non-empty")
    }

    pub fn mul_mono(&self, m: &Monomial) -> Self {
        Self {
            terms: self.terms.iter().map(|t| t.mul(m)).collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, ExprError> {
        let mut acc = 0.0;
        for t in &self.terms {
            acc += t.eval(x)?;
        }
        Ok(acc)
    }

    /// Stable log-sum-exp of the terms' affine log-space forms.
    pub fn log_eval(&self, u: &[f64]) -> f64 {
        log_sum_exp(self.terms.iter().map(|t| t.log_eval(u)))
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<VarId>) {
        for t in &self.terms {
            t.collect_vars(out);
        }
    }

    pub fn display<'a>(&'a self, vars: &'a VarSet) -> impl fmt::Display + 'a {
        DisplayPosy { p: self, vars }
    }
}

impl From<Monomial> for Posynomial {
    fn from(m: Monomial) -> Self {
        Self { terms: vec![m] }
    }
}

struct DisplayPosy<'a> {
    p: &'a Posynomial,
    vars: &'a VarSet,
}

impl fmt::Display for DisplayPosy<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.p.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", t.display(self.vars))?;
        }
        Ok(())
    }
}

fn ordered(x: f64) -> u64 {
    // Total order on the exponent values used for term sorting; exponents
    // are always finite.
    let bits = x.to_bits();
    if bits >> 63 == 0 {
        bits | (1 << 63)
    } else {
        !bits
    }
}

/// Numerically stable `log(sum(exp(l_k)))`.
pub fn log_sum_exp(ls: impl IntoIterator<Item = f64>) -> f64 {
    let ls: Vec<f64> = ls.into_iter().collect();
    let m = ls.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = ls.iter().map(|l| (l - m).exp()).sum();
    m + s.ln()
}

/// A log-convex expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Mono(Monomial),
    Posy(Posynomial),
    /// Pointwise maximum of the branches.
    Max(Vec<Expr>),
    /// `scale(x) * exp(inner(x))`; log-space form
    /// `log c_s + a_s . u + c_i exp(a_i . u)`, convex because `c_i > 0`.
    ExpMono { scale: Monomial, inner: Monomial },
    /// `f^p` with `p > 0`.
    Power(Box<Expr>, f64),
}

impl From<Monomial> for Expr {
    fn from(m: Monomial) -> Self {
        Expr::Mono(m)
    }
}

impl From<Posynomial> for Expr {
    fn from(p: Posynomial) -> Self {
        Expr::Posy(p)
    }
}

impl Expr {
    pub fn max(branches: Vec<Expr>) -> Result<Self, ExprError> {
        if branches.is_empty() {
            return Err(ExprError::EmptyMax);
        }
        Ok(Expr::Max(branches))
    }

    pub fn power(base: Expr, p: f64) -> Result<Self, ExprError> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(ExprError::BadPower(p));
        }
        Ok(Expr::Power(Box::new(base), p))
    }

    /// Value at a positive point; errors on non-positive or missing inputs.
    pub fn eval(&self, x: &[f64]) -> Result<f64, ExprError> {
        match self {
            Expr::Mono(m) => m.eval(x),
            Expr::Posy(p) => p.eval(x),
            Expr::Max(bs) => {
                let mut best = f64::NEG_INFINITY;
                for b in bs {
                    best = best.max(b.eval(x)?);
                }
                Ok(best)
            }
            Expr::ExpMono { scale, inner } => Ok(scale.eval(x)? * inner.eval(x)?.exp()),
            Expr::Power(b, p) => Ok(b.eval(x)?.powf(*p)),
        }
    }

    /// The log-space transform `F(u) = log f(exp u)` evaluated directly in
    /// log coordinates (no round trip through `exp`).
    pub fn log_eval(&self, u: &[f64]) -> f64 {
        match self {
            Expr::Mono(m) => m.log_eval(u),
            Expr::Posy(p) => p.log_eval(u),
            Expr::Max(bs) => bs.iter().map(|b| b.log_eval(u)).fold(f64::NEG_INFINITY, f64::max),
            Expr::ExpMono { scale, inner } => scale.log_eval(u) + inner.log_eval(u).exp(),
            Expr::Power(b, p) => p * b.log_eval(u),
        }
    }

    /// Accumulates `grad F(u)` into `out` (which must be zeroed by the
    /// caller and at least as long as the largest referenced variable id).
    pub fn log_grad(&self, u: &[f64], out: &mut [f64]) -> Result<(), ExprError> {
        self.log_grad_scaled(u, 1.0, out)
    }

    fn log_grad_scaled(&self, u: &[f64], w: f64, out: &mut [f64]) -> Result<(), ExprError> {
        match self {
            Expr::Mono(m) => {
                for &(id, e) in &m.exps {
                    out[id.index()] += w * e;
                }
                Ok(())
            }
            Expr::Posy(p) => {
                let f = p.log_eval(u);
                for t in &p.terms {
                    let wt = (t.log_eval(u) - f).exp();
                    for &(id, e) in &t.exps {
                        out[id.index()] += w * wt * e;
                    }
                }
                Ok(())
            }
            Expr::Max(_) => Err(ExprError::MaxNotSmooth),
            Expr::ExpMono { scale, inner } => {
                for &(id, e) in &scale.exps {
                    out[id.index()] += w * e;
                }
                let iv = inner.log_eval(u).exp();
                for &(id, e) in &inner.exps {
                    out[id.index()] += w * iv * e;
                }
                Ok(())
            }
            Expr::Power(b, p) => b.log_grad_scaled(u, w * p, out),
        }
    }

    /// Gradient of the log transform as a dense vector of length `n`.
    pub fn gradient(&self, u: &[f64], n: usize) -> Result<Vec<f64>, ExprError> {
        let mut g = vec![0.0; n];
        self.log_grad(u, &mut g)?;
        Ok(g)
    }

    pub fn is_max_free(&self) -> bool {
        match self {
            Expr::Mono(_) | Expr::Posy(_) | Expr::ExpMono { .. } => true,
            Expr::Max(_) => false,
            Expr::Power(b, _) => b.is_max_free(),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<VarId>) {
        match self {
            Expr::Mono(m) => m.collect_vars(out),
            Expr::Posy(p) => p.collect_vars(out),
            Expr::Max(bs) => bs.iter().for_each(|b| b.collect_vars(out)),
            Expr::ExpMono { scale, inner } => {
                scale.collect_vars(out);
                inner.collect_vars(out);
            }
            Expr::Power(b, _) => b.collect_vars(out),
        }
    }

    /// Multiplies by a monomial without leaving the grammar. Distributes
    /// into `Max` branches (valid because the factor is positive) and folds
    /// through `Power` via `m * f^p = (f * m^{1/p})^p`.
    pub fn mul_mono(&self, m: &Monomial) -> Expr {
        match self {
            Expr::Mono(a) => Expr::Mono(a.mul(m)),
            Expr::Posy(p) => Expr::Posy(p.mul_mono(m)),
            Expr::Max(bs) => Expr::Max(bs.iter().map(|b| b.mul_mono(m)).collect()),
            Expr::ExpMono { scale, inner } => Expr::ExpMono {
                scale: scale.mul(m),
                inner: inner.clone(),
            },
            Expr::Power(b, p) => Expr::Power(Box::new(b.mul_mono(&m.powf(1.0 / p))), *p),
        }
    }

    pub fn display<'a>(&'a self, vars: &'a VarSet) -> impl fmt::Display + 'a {
        DisplayExpr { e: self, vars }
    }
}

struct DisplayExpr<'a> {
    e: &'a Expr,
    vars: &'a VarSet,
}

impl fmt::Display for DisplayExpr<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.e {
            Expr::Mono(m) => write!(f, "{}", m.display(self.vars)),
            Expr::Posy(p) => write!(f, "{}", p.display(self.vars)),
            Expr::Max(bs) => {
                write!(f, "max(")?;
                for (i, b) in bs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", b.display(self.vars))?;
                }
                write!(f, ")")
            }
            Expr::ExpMono { scale, inner } => {
                write!(f, "{}*exp({})", scale.display(self.vars), inner.display(self.vars))
            }
            Expr::Power(b, p) => write!(f, "({})^{}", b.display(self.vars), Sig(*p)),
        }
    }
}

/// One constraint of a log-convex program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConstraintForm {
    /// `f(x) <= 1` for a log-convex `f`.
    PosyLe1(Expr),
    /// `m(x) = 1` for a monomial `m` — affine in log space.
    MonoEq1(Monomial),
    /// `m(x) >= c` for a monomial `m` and `c > 0` — used for integer and
    /// lower-bound constraints; equivalent to `c / m(x) <= 1`.
    MonoGe(Monomial, f64),
}

/// A labelled constraint. Labels are stable, human-readable identifiers
/// (`"energy.battery_capacity.s145"`) used in validation reports and duals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub label: String,
    pub form: ConstraintForm,
}

impl Constraint {
    pub fn le1(label: impl Into<String>, f: impl Into<Expr>) -> Self {
        Self { label: label.into(), form: ConstraintForm::PosyLe1(f.into()) }
    }

    pub fn eq1(label: impl Into<String>, m: Monomial) -> Self {
        Self { label: label.into(), form: ConstraintForm::MonoEq1(m) }
    }

    pub fn ge(label: impl Into<String>, m: Monomial, c: f64) -> Self {
        assert!(c > 0.0, "MonoGe bound must be positive");
        Self { label: label.into(), form: ConstraintForm::MonoGe(m, c) }
    }

    /// `lhs <= rhs` for monomial `rhs`: stored as `lhs / rhs <= 1`.
    pub fn le(label: impl Into<String>, lhs: impl Into<Expr>, rhs: &Monomial) -> Self {
        Self::le1(label, lhs.into().mul_mono(&rhs.recip()))
    }

    /// Relative violation of the constraint at a positive point:
    /// `max(0, f - 1)` for `f <= 1` forms, `|m - 1|` for equalities and
    /// `max(0, c/m - 1)` for lower bounds.
    pub fn violation(&self, x: &[f64]) -> Result<f64, ExprError> {
        Ok(match &self.form {
            ConstraintForm::PosyLe1(f) => (f.eval(x)? - 1.0).max(0.0),
            ConstraintForm::MonoEq1(m) => (m.eval(x)? - 1.0).abs(),
            ConstraintForm::MonoGe(m, c) => (c / m.eval(x)? - 1.0).max(0.0),
        })
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<VarId>) {
        match &self.form {
            ConstraintForm::PosyLe1(f) => f.collect_vars(out),
            ConstraintForm::MonoEq1(m) => m.collect_vars(out),
            ConstraintForm::MonoGe(m, _) => m.collect_vars(out),
        }
    }
}

/// Convexity defect of the log transform along one sampled chord:
/// `F(t u + (1-t) v) - t F(u) - (1-t) F(v)`. Non-positive (up to rounding)
/// for every expression in the grammar.
pub fn convexity_gap(e: &Expr, u: &[f64], v: &[f64], t: f64) -> f64 {
    let mid: Vec<f64> = u.iter().zip(v).map(|(a, b)| t * a + (1.0 - t) * b).collect();
    e.log_eval(&mid) - t * e.log_eval(u) - (1.0 - t) * e.log_eval(v)
}

/// Result of randomized log-convexity sampling; `worst` is the largest
/// chord defect observed (positive values mean non-convex beyond rounding).
#[derive(Debug, Clone, Copy)]
pub struct ConvexitySample {
    pub samples: usize,
    pub worst: f64,
    pub tol: f64,
}

impl ConvexitySample {
    pub fn passed(&self) -> bool {
        self.worst <= self.tol
    }
}

/// Samples random chords of the log transform and reports the worst
/// convexity defect. The tolerance scales with the magnitude of the values
/// involved so that it stays meaningful for expressions whose log transform
/// is far from zero.
pub fn sample_log_convexity(
    e: &Expr,
    n_vars: usize,
    samples: usize,
    rng: &mut impl rand::Rng,
) -> ConvexitySample {
    let mut worst = f64::NEG_INFINITY;
    let mut tol: f64 = 1e-12;
    for _ in 0..samples {
        let u: Vec<f64> = (0..n_vars).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let v: Vec<f64> = (0..n_vars).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let t = rng.gen_range(0.0..1.0);
        let gap = convexity_gap(e, &u, &v, t);
        let scale = t * e.log_eval(&u).abs() + (1.0 - t) * e.log_eval(&v).abs();
        worst = worst.max(gap);
        tol = tol.max(1e-12 * scale.max(1.0));
    }
    ConvexitySample { samples, worst, tol }
}
