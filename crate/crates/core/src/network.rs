//! Route/service index sets and the operational constraint families:
//! vessel capacity, origin-destination demand, sailing/port timing with
//! vessel availability, and the log-utility service level.
//!
//! Ports are linearly ordered `1..=N`. A service calls a subset of ports
//! in that order and sails outbound legs between consecutive calls, then
//! the same legs inbound. Any service whose route contains both endpoints
//! of an origin-destination pair can carry cargo for it, so several
//! services may supply the same arc. There is no transshipment: cargo
//! rides one service end to end, which is what makes flow conservation
//! structural rather than a constraint family.
//!
//! Every builder returns plain [`Constraint`] values in the `≤ 1` /
//! monomial-bound normal forms, so the emitted families are log-convex by
//! construction.

use crate::expr::{Constraint, ExprError, Monomial, Posynomial, VarId, VarSet};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Nautical mile in metres.
pub const NM_TO_M: f64 = 1852.0;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("service {0} must call at least two ports")]
    ServiceTooSmall(usize),
    #[error("service {service} calls port {port}, outside 1..={n_ports}")]
    BadPortIndex { service: usize, port: usize, n_ports: usize },
    #[error("service {0} must call ports in strictly increasing linear order")]
    UnsortedService(usize),
    #[error("no sailing distance configured for leg ({0}, {1})")]
    MissingLegDistance(usize, usize),
    #[error("cargo dimension mismatch: {0}")]
    CargoMismatch(&'static str),
    #[error("demand table rejects entry: {0}")]
    BadDemand(&'static str),
    #[error("parameter {0} must be positive and finite")]
    BadParam(&'static str),
    #[error("service level needs at least one positively weighted flow")]
    AllZeroWeights,
    #[error(transparent)]
    Expr(#[from] ExprError),
}

// ---------------------------------------------------------------------------
// Route plan and index sets.

/// A fixed shipping network: the port count, the services (each an ordered
/// subset of ports) and the sailing distances of the legs they use.
#[derive(Debug, Clone)]
pub struct RoutePlan {
    pub n_ports: usize,
    /// Port calls per service, strictly increasing in the linear order.
    pub services: Vec<Vec<usize>>,
    /// Leg distances in nautical miles, keyed by `(lo, hi)` port pair.
    pub leg_nm: BTreeMap<(usize, usize), f64>,
}

impl RoutePlan {
    pub fn new(
        n_ports: usize,
        services: Vec<Vec<usize>>,
        leg_nm: impl IntoIterator<Item = ((usize, usize), f64)>,
    ) -> Result<Self, NetError> {
        let mut dist = BTreeMap::new();
        for ((i, j), nm) in leg_nm {
            if !(nm > 0.0 && nm.is_finite()) {
                return Err(NetError::BadParam("leg distance"));
            }
            dist.insert((i.min(j), i.max(j)), nm);
        }
        let plan = Self { n_ports, services, leg_nm: dist };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), NetError> {
        for (s, ports) in self.services.iter().enumerate() {
            if ports.len() < 2 {
                return Err(NetError::ServiceTooSmall(s));
            }
            for &p in ports {
                if p < 1 || p > self.n_ports {
                    return Err(NetError::BadPortIndex {
                        service: s,
                        port: p,
                        n_ports: self.n_ports,
                    });
                }
            }
            if !ports.windows(2).all(|w| w[0] < w[1]) {
                return Err(NetError::UnsortedService(s));
            }
            for w in ports.windows(2) {
                if !self.leg_nm.contains_key(&(w[0], w[1])) {
                    return Err(NetError::MissingLegDistance(w[0], w[1]));
                }
            }
        }
        Ok(())
    }

    /// Sailing distance of the leg between `i` and `j` in metres.
    pub fn leg_m(&self, i: usize, j: usize) -> Result<f64, NetError> {
        self.leg_nm
            .get(&(i.min(j), i.max(j)))
            .map(|nm| nm * NM_TO_M)
            .ok_or(NetError::MissingLegDistance(i, j))
    }
}

/// The derived index sets of a route plan.
#[derive(Debug, Clone)]
pub struct IndexSets {
    /// Port calls per service (copy of the validated plan).
    pub ports: Vec<Vec<usize>>,
    /// Outbound sailing legs per service: consecutive port calls.
    pub legs: Vec<Vec<(usize, usize)>>,
    /// Union of the serviced origin-destination arcs, sorted.
    pub arcs: Vec<(usize, usize)>,
    /// Ordered port pairs of each service.
    pub arcs_by_service: Vec<Vec<(usize, usize)>>,
    /// Services able to supply each arc, ascending.
    pub suppliers: BTreeMap<(usize, usize), Vec<usize>>,
}

impl IndexSets {
    fn position(&self, s: usize, port: usize) -> usize {
        self.ports[s]
            .iter()
            .position(|&p| p == port)
            .unwrap_or_else(|| panic!("port {port} is not called by service {s}"))
    }

    /// Ports of service `s` up to and including `i` (the predecessor set).
    pub fn pred(&self, s: usize, i: usize) -> &[usize] {
        &self.ports[s][..=self.position(s, i)]
    }

    /// Ports of service `s` from `i` (inclusive) to the destination.
    pub fn succ(&self, s: usize, i: usize) -> &[usize] {
        &self.ports[s][self.position(s, i)..]
    }
}

pub fn build_index_sets(plan: &RoutePlan) -> Result<IndexSets, NetError> {
    plan.validate()?;
    let mut legs = Vec::new();
    let mut arcs_by_service = Vec::new();
    let mut arcs = BTreeSet::new();
    let mut suppliers: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (s, ports) in plan.services.iter().enumerate() {
        legs.push(ports.windows(2).map(|w| (w[0], w[1])).collect());
        let mut a_s = Vec::new();
        for &i in ports {
            for &j in ports {
                if i != j {
                    a_s.push((i, j));
                    arcs.insert((i, j));
                    suppliers.entry((i, j)).or_default().push(s);
                }
            }
        }
        a_s.sort_unstable();
        arcs_by_service.push(a_s);
    }
    Ok(IndexSets {
        ports: plan.services.clone(),
        legs,
        arcs: arcs.into_iter().collect(),
        arcs_by_service,
        suppliers,
    })
}

// ---------------------------------------------------------------------------
// Demand.

/// Origin-destination demand per cargo type over the planning horizon.
/// Unset entries read as zero; zero-demand arcs get no flow variables.
#[derive(Debug, Clone)]
pub struct DemandTable {
    pub n_cargo: usize,
    map: BTreeMap<(usize, usize, usize), f64>,
}

impl DemandTable {
    pub fn new(n_cargo: usize) -> Self {
        Self { n_cargo, map: BTreeMap::new() }
    }

    pub fn set(&mut self, i: usize, j: usize, cargo: usize, qty: f64) -> Result<(), NetError> {
        if cargo >= self.n_cargo {
            return Err(NetError::BadDemand("cargo index out of range"));
        }
        if i == j {
            return Err(NetError::BadDemand("demand needs distinct ports"));
        }
        if !(qty >= 0.0 && qty.is_finite()) {
            return Err(NetError::BadDemand("quantity must be finite and nonnegative"));
        }
        if qty > 0.0 {
            self.map.insert((i, j, cargo), qty);
        } else {
            self.map.remove(&(i, j, cargo));
        }
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize, cargo: usize) -> f64 {
        self.map.get(&(i, j, cargo)).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize, usize), f64)> + '_ {
        self.map.iter().map(|(&k, &v)| (k, v))
    }
}

// ---------------------------------------------------------------------------
// Operational decision variables.

/// The operational variables of the network model. Flow variables exist
/// only where a service can supply positive demand, which keeps the
/// log-utility finite without epsilon floors.
#[derive(Debug, Clone)]
pub struct FlowVars {
    pub cargo: Vec<String>,
    /// `(origin, destination, cargo, service) ->` flow quantity variable.
    pub flows: BTreeMap<(usize, usize, usize, usize), VarId>,
    /// Round trips per planning horizon, one integer variable per service.
    pub n_rt: Vec<VarId>,
    /// Vessel cargo capacity, `[service][cargo]`.
    pub f_cap: Vec<Vec<VarId>>,
    /// Sailing speed per outbound leg (shared by both directions).
    pub v: Vec<BTreeMap<(usize, usize), VarId>>,
    /// Sea time per outbound leg (shared by both directions).
    pub t_sea: Vec<BTreeMap<(usize, usize), VarId>>,
    /// Docking time per arrival, keyed by the travel direction `(from, to)`.
    pub t_port: Vec<BTreeMap<(usize, usize), VarId>>,
    /// Charging time per arrival, keyed like `t_port`.
    pub t_cha: Vec<BTreeMap<(usize, usize), VarId>>,
}

pub fn flow_vars(
    vars: &mut VarSet,
    sets: &IndexSets,
    demand: &DemandTable,
    cargo: &[&str],
) -> Result<FlowVars, NetError> {
    if cargo.len() != demand.n_cargo {
        return Err(NetError::CargoMismatch("cargo labels must match the demand table"));
    }
    let mut flows = BTreeMap::new();
    let mut n_rt = Vec::new();
    let mut f_cap = Vec::new();
    let mut v = Vec::new();
    let mut t_sea = Vec::new();
    let mut t_port = Vec::new();
    let mut t_cha = Vec::new();
    for (s, arcs) in sets.arcs_by_service.iter().enumerate() {
        for &(i, j) in arcs {
            for (c, label) in cargo.iter().enumerate() {
                if demand.get(i, j, c) > 0.0 {
                    flows.insert((i, j, c, s), vars.var(&format!("f.{label}.s{s}.{i}-{j}")));
                }
            }
        }
        n_rt.push(vars.int_var(&format!("n_rt.s{s}")));
        f_cap.push(
            cargo.iter().map(|label| vars.var(&format!("f_cap.{label}.s{s}"))).collect(),
        );
        let mut v_s = BTreeMap::new();
        let mut sea_s = BTreeMap::new();
        let mut port_s = BTreeMap::new();
        let mut cha_s = BTreeMap::new();
        for &(i, j) in &sets.legs[s] {
            v_s.insert((i, j), vars.var(&format!("v.s{s}.{i}-{j}")));
            sea_s.insert((i, j), vars.var(&format!("t_sea.s{s}.{i}-{j}")));
            for dock in [(i, j), (j, i)] {
                port_s.insert(dock, vars.var(&format!("t_port.s{s}.{}-{}", dock.0, dock.1)));
                cha_s.insert(dock, vars.var(&format!("t_cha.s{s}.{}-{}", dock.0, dock.1)));
            }
        }
        v.push(v_s);
        t_sea.push(sea_s);
        t_port.push(port_s);
        t_cha.push(cha_s);
    }
    Ok(FlowVars {
        cargo: cargo.iter().map(|s| s.to_string()).collect(),
        flows,
        n_rt,
        f_cap,
        v,
        t_sea,
        t_port,
        t_cha,
    })
}

// ---------------------------------------------------------------------------
// Constraint families.

/// Vessel capacity on every outbound and inbound leg: the cargo on board
/// while crossing the leg cannot exceed the haul of the whole fleet over
/// the horizon, `N^rt · f^cap` per deployed vessel. `vessels` supplies the
/// per-service vessel-count variables; `None` models one vessel per
/// service. Legs crossed by no existing flow variable emit nothing.
pub fn capacity_constraints(
    sets: &IndexSets,
    fv: &FlowVars,
    vessels: Option<&[VarId]>,
) -> Result<Vec<Constraint>, NetError> {
    if let Some(ids) = vessels {
        if ids.len() != sets.ports.len() {
            return Err(NetError::CargoMismatch(
                "one vessel-count variable per service is required",
            ));
        }
    }
    let mut cs = Vec::new();
    for (s, ports) in sets.ports.iter().enumerate() {
        for (c, label) in fv.cargo.iter().enumerate() {
            for k in 0..ports.len() - 1 {
                let depart = ports[k];
                let mut out_terms = Vec::new();
                let mut in_terms = Vec::new();
                for &i in &ports[..=k] {
                    for &j in &ports[k + 1..] {
                        if let Some(&id) = fv.flows.get(&(i, j, c, s)) {
                            out_terms.push(Monomial::var(id));
                        }
                        if let Some(&id) = fv.flows.get(&(j, i, c, s)) {
                            in_terms.push(Monomial::var(id));
                        }
                    }
                }
                let mut rhs = Monomial::new(1.0, [(fv.n_rt[s], 1.0), (fv.f_cap[s][c], 1.0)])?;
                if let Some(ids) = vessels {
                    rhs = rhs.mul(&Monomial::var(ids[s]));
                }
                if !out_terms.is_empty() {
                    cs.push(Constraint::le(
                        format!("cap_out.{label}.s{s}.p{depart}"),
                        Posynomial::new(out_terms)?,
                        &rhs,
                    ));
                }
                if !in_terms.is_empty() {
                    cs.push(Constraint::le(
                        format!("cap_in.{label}.s{s}.p{depart}"),
                        Posynomial::new(in_terms)?,
                        &rhs,
                    ));
                }
            }
        }
    }
    Ok(cs)
}

/// Total transported quantity per arc and cargo is bounded by the demand.
pub fn demand_constraints(
    sets: &IndexSets,
    fv: &FlowVars,
    demand: &DemandTable,
) -> Result<Vec<Constraint>, NetError> {
    let mut cs = Vec::new();
    for &(i, j) in &sets.arcs {
        for (c, label) in fv.cargo.iter().enumerate() {
            let dem = demand.get(i, j, c);
            if dem <= 0.0 {
                continue;
            }
            let terms: Vec<Monomial> = sets.suppliers[&(i, j)]
                .iter()
                .filter_map(|&s| fv.flows.get(&(i, j, c, s)).map(|&id| Monomial::var(id)))
                .collect();
            if terms.is_empty() {
                continue;
            }
            cs.push(Constraint::le(
                format!("demand.{label}.{i}-{j}"),
                Posynomial::new(terms)?,
                &Monomial::constant(dem),
            ));
        }
    }
    Ok(cs)
}

/// Cargo handling rates and per-service time budgets.
#[derive(Debug, Clone)]
pub struct TimingParams {
    /// Handling duration per cargo unit, seconds, one entry per cargo.
    pub t_unit: Vec<f64>,
    /// Acceleration rate, m/s² (`f64::INFINITY` for instant speed-up).
    pub accel: f64,
    /// Deceleration rate, m/s².
    pub decel: f64,
    /// Vessel availability per planning horizon, seconds, per service.
    pub t_route: Vec<f64>,
}

/// Sea-time epigraphs, docking-time epigraphs (loading, unloading,
/// charging) for every arrival in both directions, and the per-service
/// availability budget. Also pins every round-trip count to at least one.
pub fn timing_and_availability(
    plan: &RoutePlan,
    sets: &IndexSets,
    fv: &FlowVars,
    tp: &TimingParams,
) -> Result<Vec<Constraint>, NetError> {
    if tp.t_unit.len() != fv.cargo.len() {
        return Err(NetError::CargoMismatch("t_unit must have one entry per cargo"));
    }
    for &u in &tp.t_unit {
        if !(u >= 0.0 && u.is_finite()) {
            return Err(NetError::BadParam("t_unit"));
        }
    }
    if tp.t_route.len() != sets.ports.len() {
        return Err(NetError::CargoMismatch("t_route must have one entry per service"));
    }
    for rate in [tp.accel, tp.decel] {
        if rate.is_nan() || rate <= 0.0 {
            return Err(NetError::BadParam("accel/decel"));
        }
    }
    let k_acc = 1.0 / tp.accel + 1.0 / tp.decel;
    let mut cs = Vec::new();
    for (s, legs) in sets.legs.iter().enumerate() {
        let t_route = tp.t_route[s];
        if !(t_route > 0.0 && t_route.is_finite()) {
            return Err(NetError::BadParam("t_route"));
        }
        let mut avail = Vec::new();
        for &(i, j) in legs {
            let l = plan.leg_m(i, j)?;
            let v = fv.v[s][&(i, j)];
            let t_sea = fv.t_sea[s][&(i, j)];
            // t_sea ≥ l/v + (v/2)(1/accel + 1/decel).
            let mut sea_terms = vec![Monomial::new(l, [(v, -1.0), (t_sea, -1.0)])?];
            if k_acc > 0.0 {
                sea_terms.push(Monomial::new(k_acc / 2.0, [(v, 1.0), (t_sea, -1.0)])?);
            }
            cs.push(Constraint::le1(
                format!("t_sea.s{s}.{i}-{j}"),
                Posynomial::new(sea_terms)?,
            ));
            avail.push(Monomial::new(
                2.0 / t_route,
                [(fv.n_rt[s], 1.0), (t_sea, 1.0)],
            )?);
            for dock in [(i, j), (j, i)] {
                let at = dock.1;
                let t_port = fv.t_port[s][&dock];
                let pos = sets.ports[s].iter().position(|&p| p == at).unwrap();
                // Travelling outbound we arrive from the low side of the
                // order: arriving cargo originates before `at` and loaded
                // cargo continues past it. Inbound mirrors the sets.
                let outbound = dock.0 < dock.1;
                let (from_side, to_side): (&[usize], &[usize]) = if outbound {
                    (&sets.ports[s][..pos], &sets.ports[s][pos + 1..])
                } else {
                    (&sets.ports[s][pos + 1..], &sets.ports[s][..pos])
                };
                for (c, label) in fv.cargo.iter().enumerate() {
                    if tp.t_unit[c] == 0.0 {
                        continue;
                    }
                    let unload: Vec<Monomial> = from_side
                        .iter()
                        .filter_map(|&x| fv.flows.get(&(x, at, c, s)))
                        .map(|&id| Monomial::var(id))
                        .collect();
                    let load: Vec<Monomial> = to_side
                        .iter()
                        .filter_map(|&y| fv.flows.get(&(at, y, c, s)))
                        .map(|&id| Monomial::var(id))
                        .collect();
                    for (terms, kind) in [(unload, "unload"), (load, "load")] {
                        if terms.is_empty() {
                            continue;
                        }
                        let posy = Posynomial::new(terms)?.mul_mono(&Monomial::new(
                            tp.t_unit[c],
                            [(t_port, -1.0)],
                        )?);
                        cs.push(Constraint::le1(
                            format!("t_port.s{s}.{}-{}.{label}.{kind}", dock.0, dock.1),
                            posy,
                        ));
                    }
                }
                cs.push(Constraint::le1(
                    format!("t_port.s{s}.{}-{}.charge", dock.0, dock.1),
                    Monomial::new(1.0, [(fv.t_cha[s][&dock], 1.0), (t_port, -1.0)])?,
                ));
                avail.push(Monomial::new(
                    1.0 / t_route,
                    [(fv.n_rt[s], 1.0), (t_port, 1.0)],
                )?);
            }
        }
        cs.push(Constraint::le1(format!("availability.s{s}"), Posynomial::new(avail)?));
        cs.push(Constraint::ge(
            format!("n_rt_floor.s{s}"),
            Monomial::var(fv.n_rt[s]),
            1.0,
        ));
    }
    Ok(cs)
}

// ---------------------------------------------------------------------------
// Service level.

/// Distance of arc `(i, j)` in metres along the shortest supplying
/// service's leg chain, or `None` if no service covers the pair.
pub fn arc_distance_m(
    plan: &RoutePlan,
    sets: &IndexSets,
    i: usize,
    j: usize,
) -> Result<Option<f64>, NetError> {
    let Some(services) = sets.suppliers.get(&(i, j)) else {
        return Ok(None);
    };
    let mut best: Option<f64> = None;
    for &s in services {
        let ports = &sets.ports[s];
        let lo = ports.iter().position(|&p| p == i.min(j)).unwrap();
        let hi = ports.iter().position(|&p| p == i.max(j)).unwrap();
        let mut d = 0.0;
        for w in ports[lo..=hi].windows(2) {
            d += plan.leg_m(w[0], w[1])?;
        }
        best = Some(best.map_or(d, |b: f64| b.min(d)));
    }
    Ok(best)
}

/// Flow weights `α_ijc`: arc distance normalized over the served arcs,
/// times a configured per-cargo value weight. Deterministic; zero-weight
/// entries are omitted.
pub fn utility_weights(
    plan: &RoutePlan,
    sets: &IndexSets,
    demand: &DemandTable,
    value: &[f64],
) -> Result<BTreeMap<(usize, usize, usize), f64>, NetError> {
    if value.len() != demand.n_cargo {
        return Err(NetError::CargoMismatch("value weights must match the demand table"));
    }
    for &w in value {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(NetError::BadParam("cargo value weight"));
        }
    }
    let mut dist = BTreeMap::new();
    let mut total = 0.0;
    for &(i, j) in &sets.arcs {
        if (0..demand.n_cargo).all(|c| demand.get(i, j, c) <= 0.0) {
            continue;
        }
        if let Some(d) = arc_distance_m(plan, sets, i, j)? {
            dist.insert((i, j), d);
            total += d;
        }
    }
    let mut weights = BTreeMap::new();
    if total <= 0.0 {
        return Ok(weights);
    }
    for (&(i, j), &d) in &dist {
        for (c, &w) in value.iter().enumerate() {
            if w > 0.0 && demand.get(i, j, c) > 0.0 {
                weights.insert((i, j, c), d / total * w);
            }
        }
    }
    Ok(weights)
}

/// `Π f^α ≥ exp(U_min)` — affine in log space, hence a single monomial
/// lower bound over every weighted flow variable.
pub fn service_level_constraint(
    fv: &FlowVars,
    weights: &BTreeMap<(usize, usize, usize), f64>,
    u_min: f64,
) -> Result<Constraint, NetError> {
    let bound = u_min.exp();
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(NetError::BadParam("u_min"));
    }
    let mut exps = Vec::new();
    for (&(i, j, c), &alpha) in weights {
        if alpha <= 0.0 {
            continue;
        }
        for (&(fi, fj, fc, _), &id) in fv.flows.range((i, j, c, 0)..=(i, j, c, usize::MAX)) {
            debug_assert_eq!((fi, fj, fc), (i, j, c));
            exps.push((id, alpha));
        }
    }
    if exps.is_empty() {
        return Err(NetError::AllZeroWeights);
    }
    Ok(Constraint::ge("service_level", Monomial::new(1.0, exps)?, bound))
}

/// The network utility of the even-split reference point that serves the
/// fraction `theta` of every weighted demand, divided equally among its
/// suppliers. A `U_min` set this way is feasible by construction.
pub fn u_min_for_fraction(
    fv: &FlowVars,
    demand: &DemandTable,
    weights: &BTreeMap<(usize, usize, usize), f64>,
    theta: f64,
) -> Result<f64, NetError> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(NetError::BadParam("theta"));
    }
    let mut u = 0.0;
    for (&(i, j, c), &alpha) in weights {
        if alpha <= 0.0 {
            continue;
        }
        let k = fv.flows.range((i, j, c, 0)..=(i, j, c, usize::MAX)).count();
        if k == 0 {
            continue;
        }
        let dem = demand.get(i, j, c);
        if dem <= 0.0 {
            continue;
        }
        u += alpha * k as f64 * (theta * dem / k as f64).ln();
    }
    Ok(u)
}
