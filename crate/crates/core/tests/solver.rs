//! End-to-end tests of the mixed-integer log-convex solver.

mod common;

use common::{constructed_instance, enumerate_best, integer_instance, rel};
use zevrpp_core::{
    kkt_residual, solve_migp, solve_relaxation, Constraint, Monomial, Posynomial, Problem,
    SolveConfig, Status, VarSet,
};

#[test]
fn two_variable_problem_matches_the_hand_computed_optimum() {
    // minimize 1/x1  s.t.  x2 >= 0.5/x1 + x1^2/20,  x2 <= 2/x1,  x2 <= 3.
    // The first two constraints are active at the optimum:
    //   0.5/x1 + x1^2/20 = 2/x1  =>  x1^3 = 30.
    let mut vs = VarSet::new();
    let x1 = vs.var("x1");
    let x2 = vs.var("x2");
    let p = {
        let mut p = Problem::new(vs, Monomial::new(1.0, [(x1, -1.0)]).unwrap());
        let lhs = Posynomial::new(vec![
            Monomial::new(0.5, [(x1, -1.0), (x2, -1.0)]).unwrap(),
            Monomial::new(0.05, [(x1, 2.0), (x2, -1.0)]).unwrap(),
        ])
        .unwrap();
        p.add(Constraint::le1("floor", lhs));
        p.add(Constraint::le1(
            "cap",
            Monomial::new(0.5, [(x1, 1.0), (x2, 1.0)]).unwrap(),
        ));
        p.add(Constraint::le1("roof", Monomial::new(1.0 / 3.0, [(x2, 1.0)]).unwrap()));
        p
    };

    let sol = solve_relaxation(&p, &SolveConfig::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);

    let x1_star = 30f64.powf(1.0 / 3.0);
    let x2_star = 2.0 / x1_star;
    assert!(rel(sol.x[x1.index()], x1_star) < 1e-7, "x1 = {}", sol.x[x1.index()]);
    assert!(rel(sol.x[x2.index()], x2_star) < 1e-7, "x2 = {}", sol.x[x2.index()]);
    assert!(rel(sol.objective, 1.0 / x1_star) < 1e-7);

    // Both active constraints carry positive multipliers, the slack one does
    // not, and the recomputed KKT residual is tiny.
    assert!(sol.duals[0] > 1e-3 && sol.duals[1] > 1e-3);
    assert!(sol.duals[2] < 1e-6);
    assert!(p.max_violation(&sol.x).unwrap() < 1e-8);
    assert!(kkt_residual(&p, &sol).unwrap() < 1e-6);
}

#[test]
fn constructed_optima_are_recovered_across_random_instances() {
    let cfg = SolveConfig::default();
    for seed in 0..100u64 {
        let inst = constructed_instance(seed, true, None);
        let sol = solve_relaxation(&inst.problem, &cfg).unwrap();
        assert_eq!(sol.status, Status::Optimal, "seed {seed}");
        assert!(
            (sol.log_objective - inst.opt.ln()).abs() < 1e-6,
            "seed {seed}: objective {} vs {}",
            sol.objective,
            inst.opt
        );
        for (j, (&got, &want)) in sol.x.iter().zip(&inst.xstar).enumerate() {
            assert!(rel(got, want) < 1e-5, "seed {seed}: x[{j}] = {got}, expected {want}");
        }
        assert!(inst.problem.max_violation(&sol.x).unwrap() < 1e-7, "seed {seed}");
        assert!(kkt_residual(&inst.problem, &sol).unwrap() < 1e-5, "seed {seed}");
    }
}

#[test]
fn variable_rescaling_leaves_the_log_objective_unchanged() {
    let cfg = SolveConfig::default();
    let scale = [2.5, 0.04, 17.0, 0.8, 310.0];
    for seed in [3u64, 11, 42] {
        let plain = constructed_instance(seed, false, None);
        let scaled = constructed_instance(seed, false, Some(&scale));
        let a = solve_relaxation(&plain.problem, &cfg).unwrap();
        let b = solve_relaxation(&scaled.problem, &cfg).unwrap();
        assert_eq!(a.status, Status::Optimal);
        assert_eq!(b.status, Status::Optimal);
        assert!((a.log_objective - b.log_objective).abs() < 1e-7, "seed {seed}");
        for i in 0..plain.xstar.len() {
            assert!(rel(b.x[i] * scale[i], a.x[i]) < 1e-5, "seed {seed}: var {i}");
        }
    }
}

#[test]
fn branch_and_bound_agrees_with_exhaustive_enumeration() {
    let cfg = SolveConfig::default();
    for seed in 0..25u64 {
        let (p, ks, hi) = integer_instance(seed);
        let sol = solve_migp(&p, &cfg).unwrap();
        let best = enumerate_best(&p, &ks, &hi, &cfg);
        match best {
            Some(b) => {
                assert_eq!(sol.status, Status::Optimal, "seed {seed}");
                assert!(
                    rel(sol.objective, b) < 1e-7,
                    "seed {seed}: bnb {} vs enumeration {b}",
                    sol.objective
                );
                for &kid in &ks {
                    let v = sol.x[kid.index()];
                    assert!((v - v.round()).abs() < 1e-6, "seed {seed}: k = {v}");
                }
                assert!(p.max_violation(&sol.x).unwrap() < 1e-6, "seed {seed}");
            }
            None => assert_eq!(sol.status, Status::Infeasible, "seed {seed}"),
        }
    }
}

#[test]
fn repeated_solves_are_bitwise_identical() {
    let cfg = SolveConfig::default();
    for seed in [0u64, 9, 17] {
        let (p1, _, _) = integer_instance(seed);
        let (p2, _, _) = integer_instance(seed);
        let a = solve_migp(&p1, &cfg).unwrap();
        let b = solve_migp(&p2, &cfg).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.nodes, b.nodes);
        assert_eq!(a.newton_iterations, b.newton_iterations);
        let bits = |v: &[f64]| v.iter().map(|f| f.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.x), bits(&b.x), "seed {seed}");
        assert_eq!(a.objective.to_bits(), b.objective.to_bits(), "seed {seed}");
        assert_eq!(bits(&a.duals), bits(&b.duals), "seed {seed}");
    }
}

#[test]
fn tied_integer_optima_settle_on_the_smallest_assignment() {
    // The objective ignores n entirely; every integer value in [1, 5] is
    // optimal. The reported representative must be the smallest.
    let mut vs = VarSet::new();
    let y = vs.var("y");
    let n = vs.int_var("n");
    let mut p = Problem::new(vs, Monomial::var(y));
    p.add(Constraint::ge("y-floor", Monomial::var(y), 1.0));
    p.set_bounds(n, 1.0, 5.0);
    let sol = solve_migp(&p, &SolveConfig::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!(rel(sol.x[y.index()], 1.0) < 1e-7);
    assert!((sol.x[n.index()] - 1.0).abs() < 1e-9, "n = {}", sol.x[n.index()]);
}

#[test]
fn inconsistent_bounds_are_infeasible() {
    let mut vs = VarSet::new();
    let x = vs.var("x");
    let mut p = Problem::new(vs, Monomial::var(x));
    p.add(Constraint::ge("floor", Monomial::var(x), 5.0));
    p.add(Constraint::le1("roof", Monomial::new(0.5, [(x, 1.0)]).unwrap()));
    let sol = solve_relaxation(&p, &SolveConfig::default()).unwrap();
    assert_eq!(sol.status, Status::Infeasible);
}

#[test]
fn node_budget_exhaustion_reports_iteration_limit_with_incumbent() {
    let mut vs = VarSet::new();
    let k = vs.int_var("k");
    let mut p = Problem::new(vs, Monomial::var(k));
    p.add(Constraint::ge("floor", Monomial::var(k), 2.5));
    p.set_bounds(k, 1.0, 8.0);
    let cfg = SolveConfig { max_nodes: 1, ..SolveConfig::default() };
    let sol = solve_migp(&p, &cfg).unwrap();
    // The rounding seed already finds k = 3, but the tree is not exhausted.
    assert_eq!(sol.status, Status::IterationLimit);
    assert!(!sol.x.is_empty());
    assert!((sol.x[k.index()] - 3.0).abs() < 1e-6);
    assert!(sol.gap > 0.0);
}
