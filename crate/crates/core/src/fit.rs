//! Softmax-affine surrogate fitting.
//!
//! Fits log-convex function classes to positive sampled data. The workhorse
//! class is the softmax-affine function of the log-transformed inputs
//!
//! ```text
//!     f(y) = (1/alpha) log sum_k exp(alpha (b_k + a_k . y)),   alpha > 0,
//! ```
//!
//! which is convex in `y` for every `alpha > 0` and tends to
//! `max_k (b_k + a_k . y)` as `alpha` grows. In the original variables the
//! fit is a posynomial raised to `1/alpha`, so it can be used directly as a
//! constraint of a log-convex program.
//!
//! The nonlinear least squares problem is nonconvex, so the optimizer is a
//! damped Gauss-Newton (Levenberg) iteration on `(a, b, log alpha)` with
//! deterministic multi-starts: slab-partitioned affine seeds across each
//! input axis, a geometric grid of `alpha` values, and for `K > 1` a seed
//! built from the best `K-1` fit with one term split in two. `K = 1` is an
//! exact linear least squares problem and is solved in closed form.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::{Expr, ExprError, Monomial, Posynomial, VarId};

#[derive(Debug, Error)]
pub enum FitError {
    #[error("fit data must contain strictly positive values")]
    NonPositiveData,
    #[error("fit data points have inconsistent dimensions")]
    RaggedData,
    #[error("need at least {need} points for K = {k}, got {got}")]
    TooFewPoints { need: usize, k: usize, got: usize },
    #[error("design matrix is rank deficient; data does not pin down a monomial")]
    RankDeficient,
    #[error("no restart produced a usable fit")]
    NoConvergence,
    #[error("term count K must be at least 1")]
    BadTermCount,
    #[error("expression error: {0}")]
    Expr(#[from] ExprError),
}

/// Positive samples `(x_i, f_i)` with their log transforms precomputed.
#[derive(Debug, Clone)]
pub struct FitData {
    xs: Vec<Vec<f64>>,
    fs: Vec<f64>,
    /// Log-transformed inputs, one row per sample.
    ys: Vec<Vec<f64>>,
    /// Log-transformed outputs.
    gs: Vec<f64>,
}

impl FitData {
    pub fn new(points: Vec<(Vec<f64>, f64)>) -> Result<Self, FitError> {
        if points.is_empty() {
            return Err(FitError::TooFewPoints { need: 3, k: 1, got: 0 });
        }
        let dim = points[0].0.len();
        let mut xs = Vec::with_capacity(points.len());
        let mut fs = Vec::with_capacity(points.len());
        for (x, f) in points {
            if x.len() != dim {
                return Err(FitError::RaggedData);
            }
            if !(f > 0.0) || !f.is_finite() || x.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(FitError::NonPositiveData);
            }
            xs.push(x);
            fs.push(f);
        }
        let ys: Vec<Vec<f64>> = xs.iter().map(|x| x.iter().map(|v| v.ln()).collect()).collect();
        let gs: Vec<f64> = fs.iter().map(|f| f.ln()).collect();
        Ok(Self { xs, fs, ys, gs })
    }

    /// Samples `f` on `n` evenly spaced points of `[lo, hi]`.
    pub fn sample_1d(lo: f64, hi: f64, n: usize, mut f: impl FnMut(f64) -> f64) -> Result<Self, FitError> {
        let pts = (0..n)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                (vec![x], f(x))
            })
            .collect();
        Self::new(pts)
    }

    /// Samples `f` on an `n0 x n1` grid over the given ranges.
    pub fn sample_2d(
        r0: (f64, f64),
        r1: (f64, f64),
        n0: usize,
        n1: usize,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> Result<Self, FitError> {
        let mut pts = Vec::with_capacity(n0 * n1);
        for i in 0..n0 {
            let u = r0.0 + (r0.1 - r0.0) * i as f64 / (n0 - 1) as f64;
            for j in 0..n1 {
                let v = r1.0 + (r1.1 - r1.0) * j as f64 / (n1 - 1) as f64;
                pts.push((vec![u, v], f(u, v)));
            }
        }
        Self::new(pts)
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.xs[0].len()
    }

    pub fn points(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.xs.iter().map(|x| x.as_slice()).zip(self.fs.iter().copied())
    }
}

/// A fitted softmax-affine function of the log inputs.
#[derive(Debug, Clone)]
pub struct SoftmaxAffineFit {
    pub alpha: f64,
    /// Per-term slope vectors, `K x n`.
    pub a: Vec<Vec<f64>>,
    /// Per-term offsets, length `K`.
    pub b: Vec<f64>,
    /// Root-mean-square log-space residual over the training set.
    pub rmse_log: f64,
}

impl SoftmaxAffineFit {
    pub fn terms(&self) -> usize {
        self.b.len()
    }

    /// Value of the fit at log-space input `y`.
    pub fn eval_log(&self, y: &[f64]) -> f64 {
        let mut m = f64::NEG_INFINITY;
        let phis: Vec<f64> = self
            .b
            .iter()
            .zip(&self.a)
            .map(|(&b, a)| {
                let p = self.alpha * (b + dot(a, y));
                m = m.max(p);
                p
            })
            .collect();
        (m + phis.iter().map(|p| (p - m).exp()).sum::<f64>().ln()) / self.alpha
    }

    /// Value of the fit at a positive point in the original variables.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let y: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        self.eval_log(&y).exp()
    }

    /// RMS of log-space residuals against a data set.
    pub fn rmse_log_on(&self, data: &FitData) -> f64 {
        let sse: f64 = data
            .ys
            .iter()
            .zip(&data.gs)
            .map(|(y, &g)| {
                let r = self.eval_log(y) - g;
                r * r
            })
            .sum();
        (sse / data.len() as f64).sqrt()
    }

    /// The fit as a posynomial raised to `1/alpha`: coefficient/exponent
    /// pairs of `f^alpha = sum_k c_k prod_j x_j^{e_kj}`.
    pub fn posynomial_power(&self) -> PosynomialPowerFit {
        let terms = self
            .b
            .iter()
            .zip(&self.a)
            .map(|(&b, a)| {
                ((self.alpha * b).exp(), a.iter().map(|&v| self.alpha * v).collect())
            })
            .collect();
        PosynomialPowerFit { power: self.alpha, terms, rmse_log: self.rmse_log }
    }

    /// The fitted function as an expression over the given variables.
    pub fn expr(&self, vars: &[VarId]) -> Result<Expr, FitError> {
        self.posynomial_power().expr(vars)
    }
}

/// A fit of the form `f(x)^p = sum_k c_k prod_j x_j^{e_kj}` with `p > 0`;
/// the posynomial-power normal form of [`SoftmaxAffineFit`].
#[derive(Debug, Clone)]
pub struct PosynomialPowerFit {
    pub power: f64,
    /// `(c_k, e_k)` pairs of the posynomial in the original variables.
    pub terms: Vec<(f64, Vec<f64>)>,
    pub rmse_log: f64,
}

impl PosynomialPowerFit {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let s: f64 = self
            .terms
            .iter()
            .map(|(c, e)| c * x.iter().zip(e).map(|(&v, &p)| v.powf(p)).product::<f64>())
            .sum();
        s.powf(1.0 / self.power)
    }

    /// The posynomial side as a [`Posynomial`] over the given variables.
    pub fn posynomial(&self, vars: &[VarId]) -> Result<Posynomial, FitError> {
        let monos = self
            .terms
            .iter()
            .map(|(c, e)| {
                Monomial::new(*c, vars.iter().copied().zip(e.iter().copied()))
                    .map_err(FitError::from)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Posynomial::new(monos).map_err(FitError::from)
    }

    /// The fitted function itself: `(posynomial)^{1/p}`.
    pub fn expr(&self, vars: &[VarId]) -> Result<Expr, FitError> {
        let posy = self.posynomial(vars)?;
        Expr::power(posy.into(), 1.0 / self.power).map_err(FitError::from)
    }
}

fn dot(a: &[f64], y: &[f64]) -> f64 {
    a.iter().zip(y).map(|(&u, &v)| u * v).sum()
}

/// Fits a `K`-term softmax-affine function by deterministic multi-start
/// Levenberg iterations; `restarts` scales the seed budget.
pub fn fit_softmax_affine(
    data: &FitData,
    k: usize,
    restarts: usize,
) -> Result<SoftmaxAffineFit, FitError> {
    fit_with_alpha_range(data, k, restarts, (1e-3, 64.0), true)
}

/// Fits a posynomial-power surrogate `f^p = posynomial`, restricting the
/// exponent `p` to `power_search`. Small exponents make the posynomial side
/// nearly constant, which is exactly the regime needed for functions that
/// are almost flat in log space.
pub fn fit_posynomial_power(
    data: &FitData,
    k: usize,
    power_search: (f64, f64),
) -> Result<PosynomialPowerFit, FitError> {
    let sma = fit_with_alpha_range(data, k, 8, power_search, true)?;
    Ok(sma.posynomial_power())
}

fn fit_with_alpha_range(
    data: &FitData,
    k: usize,
    restarts: usize,
    alpha_range: (f64, f64),
    seed_from_smaller_k: bool,
) -> Result<SoftmaxAffineFit, FitError> {
    if k == 0 {
        return Err(FitError::BadTermCount);
    }
    let n = data.dim();
    let need = k * (n + 1) + 2;
    if data.len() < need.max(k + 2) {
        return Err(FitError::TooFewPoints { need: need.max(k + 2), k, got: data.len() });
    }

    if k == 1 {
        return fit_monomial_llsq(data);
    }

    let (alo, ahi) = (alpha_range.0.max(1e-6), alpha_range.1.max(alpha_range.0.max(1e-6)));
    // Geometric alpha grid across the allowed range.
    let grid = 5usize;
    let alphas: Vec<f64> = (0..grid)
        .map(|i| alo * (ahi / alo).powf(i as f64 / (grid - 1) as f64))
        .collect();

    let mut seeds: Vec<(Vec<Vec<f64>>, Vec<f64>, f64)> = Vec::new();
    for axis in 0..n {
        let slab = slab_seed(data, k, axis);
        for &al in &alphas {
            seeds.push((slab.0.clone(), slab.1.clone(), al.clamp(alo, ahi)));
        }
    }
    // Split seed: the best K-1 fit with one term duplicated, adjusted so the
    // seed evaluates the K-1 function exactly. Guarantees the K-term result
    // is no worse than the K-1 result.
    if seed_from_smaller_k {
        if let Ok(prev) = fit_with_alpha_range(data, k - 1, restarts, alpha_range, k > 2) {
            let mut a = prev.a.clone();
            let mut b = prev.b.clone();
            let split = 0;
            let shift = std::f64::consts::LN_2 / prev.alpha;
            b[split] -= shift;
            a.push(a[split].clone());
            b.push(b[split]);
            seeds.push((a, b, prev.alpha.clamp(alo, ahi)));
        }
    }
    // Jittered copies of the axis-0 slab seed.
    let mut rng = ChaCha8Rng::seed_from_u64(0x51ab_5eed);
    let base = slab_seed(data, k, 0);
    for r in 0..restarts.saturating_sub(1) {
        let mut a = base.0.clone();
        let mut b = base.1.clone();
        for row in &mut a {
            for v in row.iter_mut() {
                *v += rng.gen_range(-0.5..0.5);
            }
        }
        for v in b.iter_mut() {
            *v += rng.gen_range(-0.5..0.5);
        }
        let al = alphas[r % alphas.len()];
        seeds.push((a, b, al));
    }

    let mut best: Option<SoftmaxAffineFit> = None;
    for (a, b, al) in seeds {
        if let Some(fit) = levenberg(data, a, b, al, (alo, ahi)) {
            let better = match &best {
                None => true,
                Some(cur) => fit.rmse_log < cur.rmse_log,
            };
            if better {
                best = Some(fit);
            }
        }
    }
    best.ok_or(FitError::NoConvergence)
}

/// Exact closed-form monomial fit: linear least squares on `(1, y)`.
fn fit_monomial_llsq(data: &FitData) -> Result<SoftmaxAffineFit, FitError> {
    let n = data.dim();
    let rows = data.len();
    let mut m = DMatrix::<f64>::zeros(rows, n + 1);
    let mut rhs = DVector::<f64>::zeros(rows);
    for (i, (y, &g)) in data.ys.iter().zip(&data.gs).enumerate() {
        m[(i, 0)] = 1.0;
        for j in 0..n {
            m[(i, j + 1)] = y[j];
        }
        rhs[i] = g;
    }
    let svd = m.clone().svd(true, true);
    let tol = 1e-10 * svd.singular_values.max();
    if svd.singular_values.iter().any(|&s| s <= tol) {
        return Err(FitError::RankDeficient);
    }
    let theta = svd.solve(&rhs, tol).map_err(|_| FitError::RankDeficient)?;
    let b = theta[0];
    let a: Vec<f64> = (0..n).map(|j| theta[j + 1]).collect();
    let fit = SoftmaxAffineFit { alpha: 1.0, a: vec![a], b: vec![b], rmse_log: 0.0 };
    let rmse = fit.rmse_log_on(data);
    Ok(SoftmaxAffineFit { rmse_log: rmse, ..fit })
}

/// Slab seed: order samples along one input axis, split into `K` contiguous
/// slabs, fit an affine function to each by least squares.
fn slab_seed(data: &FitData, k: usize, axis: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = data.dim();
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&i, &j| data.ys[i][axis].partial_cmp(&data.ys[j][axis]).unwrap());
    let mut a = Vec::with_capacity(k);
    let mut b = Vec::with_capacity(k);
    for s in 0..k {
        let lo = s * data.len() / k;
        let hi = ((s + 1) * data.len() / k).max(lo + 1);
        let idx = &order[lo..hi.min(data.len())];
        let (ai, bi) = affine_llsq(data, idx, n);
        a.push(ai);
        b.push(bi);
    }
    (a, b)
}

fn affine_llsq(data: &FitData, idx: &[usize], n: usize) -> (Vec<f64>, f64) {
    let rows = idx.len();
    if rows < n + 1 {
        // Not enough points to pin a plane; use the slab mean.
        let mean = idx.iter().map(|&i| data.gs[i]).sum::<f64>() / rows.max(1) as f64;
        return (vec![0.0; n], mean);
    }
    let mut m = DMatrix::<f64>::zeros(rows, n + 1);
    let mut rhs = DVector::<f64>::zeros(rows);
    for (r, &i) in idx.iter().enumerate() {
        m[(r, 0)] = 1.0;
        for j in 0..n {
            m[(r, j + 1)] = data.ys[i][j];
        }
        rhs[r] = data.gs[i];
    }
    let svd = m.svd(true, true);
    let tol = 1e-10 * svd.singular_values.max().max(1e-300);
    match svd.solve(&rhs, tol) {
        Ok(theta) => ((0..n).map(|j| theta[j + 1]).collect(), theta[0]),
        Err(_) => {
            let mean = idx.iter().map(|&i| data.gs[i]).sum::<f64>() / rows as f64;
            (vec![0.0; n], mean)
        }
    }
}

/// Damped Gauss-Newton on the posynomial parameters `(e, beta, log alpha)`
/// where the model is `f = (1/alpha) log sum_t exp(beta_t + e_t . y)`; the
/// softmax-affine slopes are `a = e / alpha`, offsets `b = beta / alpha`.
/// This chart keeps the parameters O(1) even when `alpha` is small and the
/// affine slopes are large, which is exactly the hard regime. Returns
/// `None` when the iteration never produces a finite model.
fn levenberg(
    data: &FitData,
    a0: Vec<Vec<f64>>,
    b0: Vec<f64>,
    alpha0: f64,
    (alo, ahi): (f64, f64),
) -> Option<SoftmaxAffineFit> {
    let n = data.dim();
    let k = b0.len();
    let np = k * (n + 1) + 1;
    let rows = data.len();

    // Parameter layout: [e_11..e_1n, .., e_k1..e_kn, beta_1..beta_k, log alpha].
    let al0 = alpha0.clamp(alo, ahi);
    let mut theta = DVector::<f64>::zeros(np);
    for (t, at) in a0.iter().enumerate() {
        for j in 0..n {
            theta[t * n + j] = al0 * at[j];
        }
    }
    for t in 0..k {
        theta[k * n + t] = al0 * b0[t];
    }
    theta[np - 1] = al0.ln();

    // Returns residuals, SSE and (optionally) the Jacobian plus the vector
    // of inner log-sum values L_i used by the alpha rescale step.
    let residuals = |theta: &DVector<f64>,
                     jac: Option<&mut DMatrix<f64>>|
     -> Option<(DVector<f64>, f64, DVector<f64>)> {
        let alpha = theta[np - 1].exp();
        let mut r = DVector::<f64>::zeros(rows);
        let mut lvals = DVector::<f64>::zeros(rows);
        let mut jac = jac;
        for (i, (y, &g)) in data.ys.iter().zip(&data.gs).enumerate() {
            let mut phis = Vec::with_capacity(k);
            let mut mx = f64::NEG_INFINITY;
            for t in 0..k {
                let mut p = theta[k * n + t];
                for j in 0..n {
                    p += theta[t * n + j] * y[j];
                }
                mx = mx.max(p);
                phis.push(p);
            }
            let sum: f64 = phis.iter().map(|p| (p - mx).exp()).sum();
            let l = mx + sum.ln();
            let f = l / alpha;
            if !f.is_finite() {
                return None;
            }
            lvals[i] = l;
            r[i] = f - g;
            if let Some(jm) = jac.as_deref_mut() {
                for (t, p) in phis.iter().enumerate() {
                    let w = (p - mx).exp() / sum / alpha;
                    jm[(i, k * n + t)] = w;
                    for j in 0..n {
                        jm[(i, t * n + j)] = w * y[j];
                    }
                }
                jm[(i, np - 1)] = -f;
            }
        }
        let sse = r.dot(&r);
        sse.is_finite().then_some((r, sse, lvals))
    };

    let mut jac = DMatrix::<f64>::zeros(rows, np);
    let (mut r, mut sse, mut lvals) = residuals(&theta, Some(&mut jac))?;
    for round in 0..3 {
        let mut mu = 1e-4;
        for _ in 0..250 {
            let jt = jac.transpose();
            let h = &jt * &jac;
            let g = &jt * &r;
            let step = loop {
                let mut hm = h.clone();
                for d in 0..np {
                    hm[(d, d)] += mu * (h[(d, d)].abs() + 1e-12);
                }
                match hm.cholesky() {
                    Some(ch) => break ch.solve(&(-&g)),
                    None => {
                        mu *= 10.0;
                        if mu > 1e12 {
                            break DVector::zeros(np);
                        }
                    }
                }
            };
            if step.amax() < 1e-13 {
                break;
            }
            let mut cand = &theta + &step;
            cand[np - 1] = cand[np - 1].clamp(alo.ln(), ahi.ln());
            match residuals(&cand, None) {
                Some((_, sse2, _)) if sse2 <= sse => {
                    let improved = sse - sse2;
                    theta = cand;
                    let got = residuals(&theta, Some(&mut jac))?;
                    r = got.0;
                    sse = got.1;
                    lvals = got.2;
                    mu = (mu * 0.3).max(1e-12);
                    if improved <= 1e-15 * sse.max(1e-30) {
                        break;
                    }
                }
                _ => {
                    mu *= 3.0;
                    if mu > 1e12 {
                        break;
                    }
                }
            }
        }
        if round == 2 {
            break;
        }
        // Closed-form rescale of alpha given the inner log-sums: minimizing
        // sum (L_i / alpha - g_i)^2 over alpha alone gives
        // alpha = sum L^2 / sum L g. Escapes the slow valley in which the
        // posynomial shape is right but the outer power is not.
        let ll = lvals.dot(&lvals);
        let lg: f64 = lvals.iter().zip(&data.gs).map(|(&l, &g)| l * g).sum();
        if lg.abs() > 1e-300 && ll / lg > 0.0 {
            let astar = (ll / lg).clamp(alo, ahi);
            let mut cand = theta.clone();
            cand[np - 1] = astar.ln();
            if let Some((r2, sse2, l2)) = residuals(&cand, None) {
                if sse2 < sse {
                    theta = cand;
                    r = r2;
                    sse = sse2;
                    lvals = l2;
                    residuals(&theta, Some(&mut jac))?;
                    continue;
                }
            }
        }
        break;
    }

    let alpha = theta[np - 1].exp();
    let a: Vec<Vec<f64>> =
        (0..k).map(|t| (0..n).map(|j| theta[t * n + j] / alpha).collect()).collect();
    let b: Vec<f64> = (0..k).map(|t| theta[k * n + t] / alpha).collect();
    let fit = SoftmaxAffineFit { alpha, a, b, rmse_log: 0.0 };
    let rmse = fit.rmse_log_on(data);
    rmse.is_finite().then(|| SoftmaxAffineFit { rmse_log: rmse, ..fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{sample_log_convexity, VarSet};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn monomial_data_is_recovered_exactly() {
        let data = FitData::sample_1d(0.5, 8.0, 40, |x| 3.0 * x.powf(1.5)).unwrap();
        let fit = fit_softmax_affine(&data, 1, 1).unwrap();
        assert!(fit.rmse_log < 1e-10);
        assert!((fit.b[0].exp() - 3.0).abs() < 1e-9);
        assert!((fit.a[0][0] - 1.5).abs() < 1e-10);
    }

    #[test]
    fn k1_equals_the_closed_form_least_squares() {
        // Noisy data: the K = 1 path must coincide with the normal-equation
        // solution, not merely approximate it.
        let data = FitData::sample_1d(1.0, 9.0, 25, |x| 2.0 * x.powf(0.7) * (1.0 + 0.05 * (x * 7.3).sin())).unwrap();
        let fit = fit_softmax_affine(&data, 1, 3).unwrap();
        // Closed form via normal equations on (1, ln x).
        let (mut s1, mut sy, mut syy, mut sg, mut syg) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (x, f) in data.points() {
            let y = x[0].ln();
            let g = f.ln();
            s1 += 1.0;
            sy += y;
            syy += y * y;
            sg += g;
            syg += y * g;
        }
        let det = s1 * syy - sy * sy;
        let b = (syy * sg - sy * syg) / det;
        let a = (s1 * syg - sy * sg) / det;
        assert!((fit.b[0] - b).abs() < 1e-12);
        assert!((fit.a[0][0] - a).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_single_point_axis_is_reported() {
        // All samples share the same x: slope and intercept are confounded.
        let pts = (0..10).map(|i| (vec![2.0], 1.0 + i as f64)).collect();
        let data = FitData::new(pts).unwrap();
        assert!(matches!(fit_softmax_affine(&data, 1, 1), Err(FitError::RankDeficient)));
    }

    #[test]
    fn self_powered_ratio_curve_fits_to_a_tenth_of_a_basis_point() {
        // rho^rho on [1, 1.6] needs a posynomial-power form with a small
        // exponent; two terms reach 1e-4 log-space RMSE.
        let data = FitData::sample_1d(1.0, 1.6, 200, |r| r.powf(r)).unwrap();
        let fit = fit_posynomial_power(&data, 2, (0.005, 0.5)).unwrap();
        assert!(fit.rmse_log <= 1e-4, "rmse = {:.3e}", fit.rmse_log);
        // The dense-grid check, independent of the training samples.
        let dense = FitData::sample_1d(1.0, 1.6, 10_000, |r| r.powf(r)).unwrap();
        let mut sse = 0.0;
        for (x, f) in dense.points() {
            let r = fit.eval(x).ln() - f.ln();
            sse += r * r;
        }
        let rmse = (sse / dense.len() as f64).sqrt();
        assert!(rmse <= 1.2e-4, "dense rmse = {:.3e}", rmse);
    }

    #[test]
    fn adding_a_term_never_hurts() {
        let data = FitData::sample_1d(0.3, 5.0, 120, |x| (1.0 + x * x).sqrt()).unwrap();
        let mut prev = f64::INFINITY;
        for k in 1..=4 {
            let fit = fit_softmax_affine(&data, k, 4).unwrap();
            assert!(
                fit.rmse_log <= prev + 1e-12,
                "K = {k}: {:.3e} after {:.3e}",
                fit.rmse_log,
                prev
            );
            prev = fit.rmse_log;
        }
    }

    #[test]
    fn two_dimensional_surface_fit_improves_with_terms_and_stays_convex() {
        let data = FitData::sample_2d((0.5, 2.0), (1.0, 4.0), 15, 15, |u, v| {
            (u.powf(1.3) + 0.5 * v.powf(0.8) * u.powf(-0.4)).powf(0.9)
        })
        .unwrap();
        let fit = fit_softmax_affine(&data, 3, 4).unwrap();
        assert!(fit.rmse_log < 5e-3, "rmse = {:.3e}", fit.rmse_log);

        let mut vs = VarSet::new();
        let u = vs.var("u");
        let v = vs.var("v");
        let e = fit.expr(&[u, v]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sample = sample_log_convexity(&e, vs.len(), 500, &mut rng);
        assert!(sample.passed(), "worst defect {:.3e}", sample.worst);
    }

    #[test]
    fn rmse_helper_matches_its_definition() {
        let data = FitData::sample_1d(1.0, 2.0, 10, |_| 3.0).unwrap();
        // Constant predictor at 6: off by exactly log 2 everywhere.
        let fit = SoftmaxAffineFit {
            alpha: 1.0,
            a: vec![vec![0.0]],
            b: vec![6.0f64.ln()],
            rmse_log: 0.0,
        };
        let r = fit.rmse_log_on(&data);
        assert!((r - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn constant_data_becomes_the_unit_monomial() {
        let data = FitData::sample_1d(0.5, 2.0, 12, |_| 1.0).unwrap();
        let fit = fit_posynomial_power(&data, 1, (0.01, 1.0)).unwrap();
        assert_eq!(fit.terms.len(), 1);
        let (c, e) = &fit.terms[0];
        assert!((c - 1.0).abs() < 1e-10);
        assert!(e[0].abs() < 1e-10);
        assert!(fit.rmse_log < 1e-12);
    }

    #[test]
    fn fits_are_deterministic() {
        let data = FitData::sample_1d(0.4, 3.0, 60, |x| 1.0 + x.powf(1.7)).unwrap();
        let f1 = fit_softmax_affine(&data, 2, 5).unwrap();
        let f2 = fit_softmax_affine(&data, 2, 5).unwrap();
        assert_eq!(f1.alpha.to_bits(), f2.alpha.to_bits());
        assert_eq!(f1.rmse_log.to_bits(), f2.rmse_log.to_bits());
        for (x, y) in f1.b.iter().zip(&f2.b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
