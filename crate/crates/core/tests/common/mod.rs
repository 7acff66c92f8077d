//! Shared problem generators for the solver test suites.
//!
//! Both families are built backwards from a known answer so solver output
//! can be checked without trusting the solver itself.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use zevrpp_core::{
    solve_relaxation, Constraint, Monomial, Posynomial, Problem, SolveConfig, Status, VarId,
    VarSet,
};

pub fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

/// A problem whose optimum is known by construction. `xstar` covers every
/// variable, including any auxiliary one defined through an equality.
pub struct Constructed {
    pub problem: Problem,
    pub xstar: Vec<f64>,
    pub opt: f64,
}

/// Builds `minimize c0 * prod x_i^{-w_i}  s.t.  sum_i theta_i x_i^{s_i} <= 1`
/// with `theta` chosen so the constraint is tight at a randomly drawn `xstar`
/// and the stationarity condition holds there. With `extras` set, a slack
/// redundant posynomial constraint and an auxiliary variable defined by a
/// monomial equality are mixed in; neither moves the optimum. `scale`
/// substitutes `x_i -> scale_i * x_i`, which changes the variables but not
/// the optimal value.
pub fn constructed_instance(seed: u64, extras: bool, scale: Option<&[f64]>) -> Constructed {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=5usize);
    let unit = vec![1.0; n];
    let k = scale.map(|s| &s[..n]).unwrap_or(&unit);

    let mut vs = VarSet::new();
    let ids: Vec<VarId> = (0..n).map(|i| vs.var(&format!("x{i}"))).collect();
    let xstar: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.gen_range(-1.0..1.0))).collect();
    let s: Vec<f64> = (0..n).map(|_| rng.gen_range(0.4..2.2)).collect();
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..2.0)).collect();
    let wsum: f64 = (0..n).map(|i| w[i] / s[i]).sum();

    let mono = |c: f64, exps: &[(VarId, f64)]| {
        // Apply the variable rescaling to the coefficient.
        let mut cc = c;
        for &(id, e) in exps {
            if id.index() < n {
                cc *= k[id.index()].powf(e);
            }
        }
        Monomial::new(cc, exps.iter().copied()).unwrap()
    };

    let active = Posynomial::new(
        (0..n)
            .map(|i| {
                let theta = (w[i] / s[i]) / (wsum * xstar[i].powf(s[i]));
                mono(theta, &[(ids[i], s[i])])
            })
            .collect(),
    )
    .unwrap();
    let c0 = 10f64.powf(rng.gen_range(-1.0..1.0));
    let obj_exps: Vec<(VarId, f64)> = ids.iter().zip(&w).map(|(&id, &wi)| (id, -wi)).collect();
    let objective = mono(c0, &obj_exps);
    let opt = c0 * (0..n).map(|i| xstar[i].powf(-w[i])).product::<f64>();

    let mut full_star: Vec<f64> = (0..n).map(|i| xstar[i] / k[i]).collect();
    let mut cons = vec![Constraint::le1("active", active)];

    if extras && rng.gen_bool(0.5) {
        // A posynomial that evaluates to 0.5 at the optimum: present but slack.
        let terms = rng.gen_range(1..=3usize);
        let mut raw = Vec::new();
        let mut val = 0.0;
        for _ in 0..terms {
            let c: f64 = rng.gen_range(0.2..2.0);
            let exps: Vec<(VarId, f64)> =
                ids.iter().map(|&id| (id, rng.gen_range(-1.5..1.5))).collect();
            val += c * exps.iter().map(|&(id, e)| xstar[id.index()].powf(e)).product::<f64>();
            raw.push((c, exps));
        }
        let posy =
            Posynomial::new(raw.iter().map(|(c, exps)| mono(0.5 * c / val, exps)).collect())
                .unwrap();
        cons.push(Constraint::le1("slack", posy));
    }

    let mut vs = vs;
    if extras && rng.gen_bool(0.5) {
        // y = cy * prod x^{ay}: an eliminable monomial equality.
        let y = vs.var("y");
        let cy = 10f64.powf(rng.gen_range(-0.5..0.5));
        let ay: Vec<(VarId, f64)> = ids.iter().map(|&id| (id, rng.gen_range(-1.0..1.0))).collect();
        let ystar = cy * ay.iter().map(|&(id, e)| xstar[id.index()].powf(e)).product::<f64>();
        let mut exps = ay;
        exps.push((y, -1.0));
        cons.push(Constraint::eq1("define-y", mono(cy, &exps)));
        full_star.push(ystar);
    }

    let mut problem = Problem::new(vs, objective);
    problem.extend(cons);
    Constructed { problem, xstar: full_star, opt }
}

/// Random mixed-integer instance. Positive objective exponents push every
/// variable down; posynomial couplings push the integers up, so the optimum
/// sits on a nontrivial integer assignment. Returns the integer ids and
/// their upper ranges for exhaustive enumeration.
pub fn integer_instance(seed: u64) -> (Problem, Vec<VarId>, Vec<u32>) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 ^ seed);
    let ni = rng.gen_range(1..=3usize);
    let nc = rng.gen_range(0..=2usize);
    let mut vs = VarSet::new();
    let ks: Vec<VarId> = (0..ni).map(|i| vs.int_var(&format!("k{i}"))).collect();
    let xs: Vec<VarId> = (0..nc).map(|j| vs.var(&format!("x{j}"))).collect();
    let hi: Vec<u32> = (0..ni).map(|_| rng.gen_range(2..=6)).collect();

    let c0 = 10f64.powf(rng.gen_range(-0.5..0.5));
    let mut obj_exps: Vec<(VarId, f64)> = Vec::new();
    for &kid in &ks {
        obj_exps.push((kid, rng.gen_range(0.2..1.5)));
    }
    for &xid in &xs {
        obj_exps.push((xid, rng.gen_range(0.2..1.5)));
    }
    let objective = Monomial::new(c0, obj_exps).unwrap();

    let mut cons = Vec::new();
    for c in 0..rng.gen_range(1..=2usize) {
        // sum_i gam_i k_i^{-r_i} <= 1, scaled to be satisfiable at k = hi.
        let raw: Vec<(f64, f64)> =
            (0..ni).map(|_| (rng.gen_range(0.2..1.0), rng.gen_range(0.5..1.5))).collect();
        let at_hi: f64 = raw.iter().zip(&hi).map(|(&(g, r), &h)| g * (h as f64).powf(-r)).sum();
        let target = rng.gen_range(0.3..0.9);
        let posy = Posynomial::new(
            raw.iter()
                .zip(&ks)
                .map(|(&(g, r), &kid)| Monomial::new(g * target / at_hi, [(kid, -r)]).unwrap())
                .collect(),
        )
        .unwrap();
        cons.push(Constraint::le1(format!("push-up-{c}"), posy));
    }
    for (j, &xid) in xs.iter().enumerate() {
        cons.push(Constraint::ge(
            format!("x{j}-floor"),
            Monomial::var(xid),
            rng.gen_range(0.2..2.0),
        ));
        if rng.gen_bool(0.5) {
            // x_j >= d * prod k^e ties the continuous part to the integers.
            let d: f64 = rng.gen_range(0.3..1.5);
            let mut exps: Vec<(VarId, f64)> =
                ks.iter().map(|&kid| (kid, rng.gen_range(0.0..0.8))).collect();
            exps.push((xid, -1.0));
            cons.push(Constraint::le1(format!("x{j}-tie"), Monomial::new(d, exps).unwrap()));
        }
    }
    if rng.gen_bool(0.3) {
        // An upper coupling on the integers; can render the instance
        // infeasible, which the enumeration check must agree on.
        let exps: Vec<(VarId, f64)> =
            ks.iter().map(|&kid| (kid, rng.gen_range(0.0..0.7))).collect();
        let cap: f64 = rng.gen_range(2.0..20.0);
        cons.push(Constraint::le1("int-cap", Monomial::new(1.0 / cap, exps).unwrap()));
    }

    let mut problem = Problem::new(vs, objective);
    problem.extend(cons);
    for (i, &kid) in ks.iter().enumerate() {
        problem.set_bounds(kid, 1.0, hi[i] as f64);
    }
    (problem, ks, hi)
}

/// Best objective over the full integer grid, found by fixing every
/// assignment in turn and solving the continuous remainder.
pub fn enumerate_best(p: &Problem, ks: &[VarId], hi: &[u32], cfg: &SolveConfig) -> Option<f64> {
    let mut assign = vec![1u32; ks.len()];
    let mut best: Option<f64> = None;
    loop {
        let mut fixed = p.clone();
        for (i, &kid) in ks.iter().enumerate() {
            fixed.set_bounds(kid, assign[i] as f64, assign[i] as f64);
        }
        let sol = solve_relaxation(&fixed, cfg).unwrap();
        if sol.status == Status::Optimal && fixed.max_violation(&sol.x).unwrap() < 1e-6 {
            best = Some(best.map_or(sol.objective, |b: f64| b.min(sol.objective)));
        }
        // Advance the mixed-radix counter.
        let mut i = 0;
        loop {
            if i == ks.len() {
                return best;
            }
            assign[i] += 1;
            if assign[i] <= hi[i] {
                break;
            }
            assign[i] = 1;
            i += 1;
        }
    }
}
