//! Branch and bound over the integer variables of a compiled problem.
//!
//! * node selection: best bound first, ties broken by creation order;
//! * branching: the most fractional integer variable, ties broken by the
//!   lowest variable id;
//! * incumbent seeding: the root relaxation is rounded up and re-solved
//!   with the integers fixed;
//! * pruning: nodes whose bound is within the relative gap tolerance of
//!   the incumbent;
//! * tie polishing: once the gap is closed, each integer variable is
//!   walked downward (in id order, others held at the incumbent) while the
//!   objective stays within tolerance, so reported integers are the
//!   lexicographically smallest representative of tied optima.
//!
//! Everything is deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::solve::barrier::{solve_continuous, ContStatus, NodeBox};
use crate::solve::compile::Compiled;
use crate::solve::{SolveConfig, Status};

pub(crate) struct Incumbent {
    pub z: Vec<f64>,
    pub obj_log: f64,
    pub ints: Vec<f64>,
    pub duals: Vec<f64>,
    pub kkt: f64,
}

pub(crate) struct BnbResult {
    pub status: Status,
    pub incumbent: Option<Incumbent>,
    pub nodes: usize,
    pub newton_iters: usize,
    pub gap: f64,
}

struct Node {
    bound_log: f64,
    id: usize,
    ilo: Vec<f64>,
    ihi: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap: make the smallest bound (then the
        // smallest id) the "largest" element.
        other
            .bound_log
            .total_cmp(&self.bound_log)
            .then_with(|| other.id.cmp(&self.id))
    }
}

const INT_TOL: f64 = 1e-6;
const OBJ_TIE: f64 = 1e-9;

pub(crate) fn branch_and_bound(c: &Compiled, cfg: &SolveConfig) -> BnbResult {
    let base = NodeBox::root(c);
    let nint = c.int_z.len();
    let root_ilo: Vec<f64> = c
        .int_z
        .iter()
        .map(|&j| (base.lo[j as usize].exp() - 1e-9).ceil().max(1.0))
        .collect();
    let root_ihi: Vec<f64> = c
        .int_z
        .iter()
        .map(|&j| (base.hi[j as usize].exp() + 1e-9).floor())
        .collect();

    let mut out = BnbResult {
        status: Status::Optimal,
        incumbent: None,
        nodes: 0,
        newton_iters: 0,
        gap: 0.0,
    };

    let boxed = |ilo: &[f64], ihi: &[f64]| -> NodeBox {
        let mut nb = base.clone();
        for (k, &j) in c.int_z.iter().enumerate() {
            let j = j as usize;
            if ihi[k] < ilo[k] {
                nb.lo[j] = 1.0;
                nb.hi[j] = 0.0; // empty box; solver reports infeasible
                continue;
            }
            if ilo[k] == ihi[k] {
                let v = ilo[k].ln();
                nb.lo[j] = v;
                nb.hi[j] = v;
            } else {
                nb.lo[j] = nb.lo[j].max(ilo[k].ln());
                nb.hi[j] = nb.hi[j].min(ihi[k].ln());
            }
        }
        nb
    };

    // Root relaxation.
    let root = solve_continuous(c, &boxed(&root_ilo, &root_ihi), cfg);
    out.nodes += 1;
    out.newton_iters += root.newton_iters;
    match root.status {
        ContStatus::Infeasible => {
            out.status = Status::Infeasible;
            return out;
        }
        ContStatus::Unbounded => {
            out.status = Status::Unbounded;
            return out;
        }
        ContStatus::IterLimit => {
            out.status = Status::IterationLimit;
            return out;
        }
        ContStatus::Optimal => {}
    }

    let int_values = |z: &[f64]| -> Vec<f64> {
        c.int_z.iter().map(|&j| z[j as usize].exp()).collect()
    };

    let mut incumbent: Option<Incumbent> = None;
    let better = |cand_obj: f64, cand_ints: &[f64], inc: &Incumbent| -> bool {
        let rel = (cand_obj - inc.obj_log).exp();
        if rel < 1.0 - OBJ_TIE {
            return true;
        }
        if rel <= 1.0 + OBJ_TIE {
            for (a, b) in cand_ints.iter().zip(&inc.ints) {
                if (a - b).abs() > 0.5 {
                    return a < b;
                }
            }
        }
        false
    };

    // Fix all integers to `vals` and re-solve the continuous problem.
    let mut fixed_solve_iters = 0usize;
    let mut fixed_solve = |vals: &[f64]| -> Option<Incumbent> {
        let r = solve_continuous(c, &boxed(vals, vals), cfg);
        fixed_solve_iters += r.newton_iters;
        (r.status == ContStatus::Optimal).then(|| Incumbent {
            obj_log: r.obj_log,
            ints: vals.to_vec(),
            z: r.z,
            duals: r.duals,
            kkt: r.kkt,
        })
    };

    // Seed the incumbent by rounding the root relaxation up.
    let seed: Vec<f64> = int_values(&root.z)
        .iter()
        .enumerate()
        .map(|(k, &x)| (x - 1e-9).ceil().clamp(root_ilo[k], root_ihi[k].max(root_ilo[k])))
        .collect();
    if root_ihi.iter().zip(&root_ilo).all(|(h, l)| h >= l) {
        if let Some(inc) = fixed_solve(&seed) {
            incumbent = Some(inc);
        }
    }

    let mut heap = BinaryHeap::new();
    let mut next_id = 1usize;
    heap.push(Node {
        bound_log: root.obj_log,
        id: 0,
        ilo: root_ilo.clone(),
        ihi: root_ihi.clone(),
    });

    let prune_against = |bound_log: f64, inc: &Option<Incumbent>| -> bool {
        match inc {
            Some(i) => (bound_log - i.obj_log).exp() >= 1.0 - cfg.int_gap,
            None => false,
        }
    };

    let mut bailed = false;
    while let Some(node) = heap.pop() {
        if prune_against(node.bound_log, &incumbent) {
            continue;
        }
        if out.nodes >= cfg.max_nodes {
            out.status = Status::IterationLimit;
            // The popped node carries the best remaining bound.
            out.gap = match &incumbent {
                Some(i) => 1.0 - (node.bound_log - i.obj_log).exp(),
                None => f64::INFINITY,
            };
            bailed = true;
            break;
        }
        let res = solve_continuous(c, &boxed(&node.ilo, &node.ihi), cfg);
        out.nodes += 1;
        out.newton_iters += res.newton_iters;
        match res.status {
            ContStatus::Infeasible => continue,
            ContStatus::Unbounded => {
                out.status = Status::Unbounded;
                bailed = true;
                break;
            }
            ContStatus::IterLimit => {
                out.status = Status::IterationLimit;
                bailed = true;
                break;
            }
            ContStatus::Optimal => {}
        }
        if prune_against(res.obj_log, &incumbent) {
            continue;
        }
        let xs = int_values(&res.z);
        // Most fractional variable.
        let mut pick: Option<(usize, f64)> = None;
        for (k, &x) in xs.iter().enumerate() {
            let frac = (x - x.round()).abs();
            if frac > INT_TOL {
                let dist = (x - x.floor()).min(x.ceil() - x);
                if pick.map_or(true, |(_, best)| dist > best) {
                    pick = Some((k, dist));
                }
            }
        }
        match pick {
            None => {
                // Integral: round and re-solve with integers fixed for a
                // clean candidate.
                let vals: Vec<f64> = xs
                    .iter()
                    .enumerate()
                    .map(|(k, &x)| x.round().clamp(node.ilo[k], node.ihi[k]))
                    .collect();
                let cand = fixed_solve(&vals).unwrap_or(Incumbent {
                    obj_log: res.obj_log,
                    ints: vals,
                    z: res.z,
                    duals: res.duals,
                    kkt: res.kkt,
                });
                let take = match &incumbent {
                    None => true,
                    Some(inc) => better(cand.obj_log, &cand.ints, inc),
                };
                if take {
                    incumbent = Some(cand);
                }
            }
            Some((k, _)) => {
                let x = xs[k];
                let fl = (x + 1e-9).floor();
                if fl >= node.ilo[k] {
                    let mut ihi = node.ihi.clone();
                    ihi[k] = fl;
                    heap.push(Node {
                        bound_log: res.obj_log,
                        id: next_id,
                        ilo: node.ilo.clone(),
                        ihi,
                    });
                    next_id += 1;
                }
                if fl + 1.0 <= node.ihi[k] {
                    let mut ilo = node.ilo.clone();
                    ilo[k] = fl + 1.0;
                    heap.push(Node {
                        bound_log: res.obj_log,
                        id: next_id,
                        ilo,
                        ihi: node.ihi.clone(),
                    });
                    next_id += 1;
                }
            }
        }
    }
    out.newton_iters += fixed_solve_iters;

    if !bailed {
        out.gap = 0.0;
        if incumbent.is_none() {
            out.status = Status::Infeasible;
        }
    }

    // Lexicographic tie polishing.
    if cfg.polish_ties && !bailed {
        if let Some(inc0) = incumbent.take() {
            let ref_obj = inc0.obj_log;
            let mut inc = inc0;
            for k in 0..nint {
                loop {
                    let v = inc.ints[k] - 1.0;
                    if v < root_ilo[k] {
                        break;
                    }
                    let mut vals = inc.ints.clone();
                    vals[k] = v;
                    let r = solve_continuous(c, &boxed(&vals, &vals), cfg);
                    out.newton_iters += r.newton_iters;
                    if r.status == ContStatus::Optimal && (r.obj_log - ref_obj).exp() <= 1.0 + OBJ_TIE
                    {
                        inc = Incumbent {
                            obj_log: r.obj_log,
                            ints: vals,
                            z: r.z,
                            duals: r.duals,
                            kkt: r.kkt,
                        };
                    } else {
                        break;
                    }
                }
            }
            incumbent = Some(inc);
        }
    }

    out.incumbent = incumbent;
    out
}
