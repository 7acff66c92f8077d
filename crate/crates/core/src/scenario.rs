//! Scenario files: the ports, leg distances, demand table, route cases
//! and parameter catalog that define one planning problem.
//!
//! The on-disk format is TOML — line-oriented `key = value` text grouped
//! into sections — so every malformed field surfaces as a located error
//! (file plus key or line) instead of a crash. Every numeric model
//! parameter lives in the scenario file under a provenance section,
//! `[params.paper]` for values transcribed from published material and
//! `[params.assumed]` for engineering assumptions, so the model has no
//! hidden constants: builders request parameters by name and missing ones
//! fail loudly.

use crate::network::{DemandTable, NetError, RoutePlan};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

/// Cargo types of the model, in variable-index order.
pub const CARGO_LABELS: [&str; 2] = ["pax", "roro"];

#[derive(Debug, Error)]
pub enum ScenError {
    #[error("{origin}: {source}")]
    Io {
        origin: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}: {msg}")]
    Schema { origin: String, msg: String },
    #[error("{origin}: `{key}`: {msg}")]
    Invalid { origin: String, key: String, msg: String },
    #[error("missing required parameter `{0}`")]
    MissingParam(String),
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("unknown case `{0}`")]
    UnknownCase(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Where a parameter value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Paper,
    Assumed,
}

/// The merged, provenance-tagged parameter namespace of a scenario.
#[derive(Debug, Clone, Default)]
pub struct Params {
    map: BTreeMap<String, (f64, Provenance)>,
}

impl Params {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.map.get(name).map(|&(v, _)| v)
    }

    pub fn require(&self, name: &str) -> Result<f64, ScenError> {
        self.get(name).ok_or_else(|| ScenError::MissingParam(name.to_string()))
    }

    pub fn provenance(&self, name: &str) -> Option<Provenance> {
        self.map.get(name).map(|&(_, p)| p)
    }

    /// Overrides an existing parameter (sweeps); unknown names are
    /// rejected so a typo cannot silently create a dead knob.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), ScenError> {
        match self.map.get_mut(name) {
            Some(slot) => {
                slot.0 = value;
                Ok(())
            }
            None => Err(ScenError::UnknownParam(name.to_string())),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64, src: Provenance) {
        self.map.insert(name.into(), (value, src));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64, Provenance)> {
        self.map.iter().map(|(k, &(v, p))| (k.as_str(), v, p))
    }
}

/// How the fleet design variables are shared across services in a case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FleetMode {
    /// Design and frequency pinned to given values per service.
    Baseline,
    /// One shared optimized design for every service.
    Uniform,
    /// An independent optimized design per service.
    Mixed,
}

/// A port with its cost coefficients.
#[derive(Debug, Clone)]
pub struct Port {
    pub name: String,
    /// Berthing cost coefficient (per gross ton per year).
    pub c_port: f64,
    /// Electricity price (per joule drawn from shore).
    pub c_el: f64,
}

/// Pinned baseline design for one service.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinSpec {
    pub l: f64,
    pub b: f64,
    pub t: f64,
    pub d: f64,
    pub l_sup: f64,
    pub n_rt: f64,
    pub n_vessel: f64,
}

/// One solvable case: its routes and fleet mode.
#[derive(Debug, Clone)]
pub struct CaseSpec {
    pub routes: Vec<Vec<usize>>,
    pub mode: FleetMode,
    /// One entry per route when `mode` is `Baseline`, empty otherwise.
    pub pins: Vec<PinSpec>,
}

/// A fully validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    /// Planning horizon length in hours.
    pub horizon_h: f64,
    pub ports: Vec<Port>,
    /// Leg distances in nautical miles, keyed `(lo, hi)`.
    pub legs_nm: BTreeMap<(usize, usize), f64>,
    pub demand: DemandTable,
    pub cases: BTreeMap<String, CaseSpec>,
    pub params: Params,
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenError> {
        let path = path.as_ref();
        let origin = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenError::Io { origin: origin.clone(), source })?;
        Self::parse(&text, &origin)
    }

    /// Parses and validates scenario text; `origin` names the source in
    /// error messages (a file path, or a tag for inline text).
    pub fn parse(text: &str, origin: &str) -> Result<Self, ScenError> {
        let raw: Raw = toml::from_str(text).map_err(|e| ScenError::Schema {
            origin: origin.to_string(),
            msg: e.to_string().trim_end().replace('\n', " "),
        })?;
        raw.build(origin)
    }

    /// Planning horizon in seconds.
    pub fn t_ph(&self) -> f64 {
        self.horizon_h * 3600.0
    }

    /// Planning horizons per year.
    pub fn n_ph(&self) -> f64 {
        365.0 * 24.0 / self.horizon_h
    }

    pub fn case(&self, name: &str) -> Result<&CaseSpec, ScenError> {
        self.cases.get(name).ok_or_else(|| ScenError::UnknownCase(name.to_string()))
    }

    /// The route plan of a case, over this scenario's leg distances.
    pub fn route_plan(&self, case: &str) -> Result<RoutePlan, ScenError> {
        let spec = self.case(case)?;
        Ok(RoutePlan::new(
            self.ports.len(),
            spec.routes.clone(),
            self.legs_nm.iter().map(|(&k, &v)| (k, v)),
        )?)
    }
}

// ---------------------------------------------------------------------------
// Raw deserialization schema and its validation into `Scenario`.

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    meta: RawMeta,
    ports: Vec<RawPort>,
    legs: BTreeMap<String, f64>,
    demand: RawDemand,
    cases: BTreeMap<String, RawCase>,
    #[serde(default)]
    params: RawParams,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeta {
    name: String,
    horizon_h: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPort {
    name: String,
    #[serde(default)]
    c_port: f64,
    #[serde(default)]
    c_el: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDemand {
    #[serde(default)]
    symmetric: bool,
    #[serde(default)]
    pax: BTreeMap<String, f64>,
    #[serde(default)]
    roro: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCase {
    routes: Vec<String>,
    mode: FleetMode,
    #[serde(default)]
    pins: Vec<PinSpec>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawParams {
    #[serde(default)]
    paper: BTreeMap<String, f64>,
    #[serde(default)]
    assumed: BTreeMap<String, f64>,
}

fn invalid(origin: &str, key: impl Into<String>, msg: impl Into<String>) -> ScenError {
    ScenError::Invalid { origin: origin.to_string(), key: key.into(), msg: msg.into() }
}

/// Parses `"3-5"` into an ordered port pair; `label` names the key in
/// error messages.
fn parse_pair(
    origin: &str,
    label: &str,
    pair: &str,
    n_ports: usize,
) -> Result<(usize, usize), ScenError> {
    let parts: Vec<&str> = pair.split('-').collect();
    let err = |msg: &str| invalid(origin, label, msg);
    if parts.len() != 2 {
        return Err(err("expected a port pair like \"1-2\""));
    }
    let i: usize = parts[0].trim().parse().map_err(|_| err("ports must be integers"))?;
    let j: usize = parts[1].trim().parse().map_err(|_| err("ports must be integers"))?;
    if i == j {
        return Err(err("ports must differ"));
    }
    for p in [i, j] {
        if p < 1 || p > n_ports {
            return Err(err(&format!("port {p} outside 1..={n_ports}")));
        }
    }
    Ok((i, j))
}

impl Raw {
    fn build(self, origin: &str) -> Result<Scenario, ScenError> {
        if !(self.meta.horizon_h > 0.0 && self.meta.horizon_h.is_finite()) {
            return Err(invalid(origin, "meta.horizon_h", "must be positive and finite"));
        }
        if self.ports.is_empty() {
            return Err(invalid(origin, "ports", "at least one port required"));
        }
        let mut ports = Vec::new();
        for (idx, p) in self.ports.into_iter().enumerate() {
            let key = format!("ports[{}]", idx + 1);
            if p.name.trim().is_empty() {
                return Err(invalid(origin, key, "port name must not be empty"));
            }
            for (v, what) in [(p.c_port, "c_port"), (p.c_el, "c_el")] {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(invalid(
                        origin,
                        format!("{key}.{what}"),
                        "must be nonnegative and finite",
                    ));
                }
            }
            if ports.iter().any(|q: &Port| q.name == p.name) {
                return Err(invalid(origin, key, format!("duplicate port name `{}`", p.name)));
            }
            ports.push(Port { name: p.name, c_port: p.c_port, c_el: p.c_el });
        }
        let n_ports = ports.len();

        let mut legs_nm = BTreeMap::new();
        for (key, nm) in &self.legs {
            let (i, j) = parse_pair(origin, &format!("legs.{key}"), key, n_ports)?;
            if !(*nm > 0.0 && nm.is_finite()) {
                return Err(invalid(
                    origin,
                    format!("legs.{key}"),
                    "distance must be positive and finite",
                ));
            }
            legs_nm.insert((i.min(j), i.max(j)), *nm);
        }

        let mut demand = DemandTable::new(CARGO_LABELS.len());
        let tables = [(&self.demand.pax, 0usize), (&self.demand.roro, 1usize)];
        for (table, cargo) in tables {
            for (key, qty) in table {
                let label = format!("demand.{}.{key}", CARGO_LABELS[cargo]);
                let (i, j) = parse_pair(origin, &label, key, n_ports)?;
                demand
                    .set(i, j, cargo, *qty)
                    .map_err(|e| invalid(origin, &label, e.to_string()))?;
            }
        }
        if self.demand.symmetric {
            // Mirror entries whose reverse direction is unset.
            let existing: Vec<((usize, usize, usize), f64)> = demand.iter().collect();
            for ((i, j, c), qty) in existing {
                if demand.get(j, i, c) == 0.0 {
                    demand.set(j, i, c, qty).expect("mirrored entry is valid");
                }
            }
        }

        let mut cases = BTreeMap::new();
        for (case_name, raw_case) in self.cases {
            let key = format!("cases.{case_name}");
            if raw_case.routes.is_empty() {
                return Err(invalid(origin, &key, "at least one route required"));
            }
            let mut routes = Vec::new();
            for spec in &raw_case.routes {
                let mut route = Vec::new();
                for part in spec.split('-') {
                    let p: usize = part.trim().parse().map_err(|_| {
                        invalid(origin, format!("{key}.routes"), format!("bad route `{spec}`"))
                    })?;
                    route.push(p);
                }
                routes.push(route);
            }
            match raw_case.mode {
                FleetMode::Baseline => {
                    if raw_case.pins.len() != routes.len() {
                        return Err(invalid(
                            origin,
                            format!("{key}.pins"),
                            format!(
                                "baseline needs one pin per route ({} != {})",
                                raw_case.pins.len(),
                                routes.len()
                            ),
                        ));
                    }
                    for (r, pin) in raw_case.pins.iter().enumerate() {
                        let pk = format!("{key}.pins[{r}]");
                        for (v, what) in [
                            (pin.l, "l"),
                            (pin.b, "b"),
                            (pin.t, "t"),
                            (pin.d, "d"),
                            (pin.l_sup, "l_sup"),
                            (pin.n_rt, "n_rt"),
                            (pin.n_vessel, "n_vessel"),
                        ] {
                            if !(v > 0.0 && v.is_finite()) {
                                return Err(invalid(
                                    origin,
                                    format!("{pk}.{what}"),
                                    "must be positive and finite",
                                ));
                            }
                        }
                        for (v, what) in [(pin.n_rt, "n_rt"), (pin.n_vessel, "n_vessel")] {
                            if (v - v.round()).abs() > 1e-9 || v < 1.0 {
                                return Err(invalid(
                                    origin,
                                    format!("{pk}.{what}"),
                                    "must be an integer of at least 1",
                                ));
                            }
                        }
                    }
                }
                _ => {
                    if !raw_case.pins.is_empty() {
                        return Err(invalid(
                            origin,
                            format!("{key}.pins"),
                            "pins are only valid for baseline mode",
                        ));
                    }
                }
            }
            cases.insert(
                case_name,
                CaseSpec { routes, mode: raw_case.mode, pins: raw_case.pins },
            );
        }

        let mut params = Params::default();
        for (name, value) in &self.params.paper {
            if !value.is_finite() {
                return Err(invalid(origin, format!("params.paper.{name}"), "must be finite"));
            }
            params.insert(name.clone(), *value, Provenance::Paper);
        }
        for (name, value) in &self.params.assumed {
            if self.params.paper.contains_key(name) {
                return Err(invalid(
                    origin,
                    format!("params.assumed.{name}"),
                    "declared under both provenances",
                ));
            }
            if !value.is_finite() {
                return Err(invalid(origin, format!("params.assumed.{name}"), "must be finite"));
            }
            params.insert(name.clone(), *value, Provenance::Assumed);
        }

        let scenario = Scenario {
            name: self.meta.name,
            horizon_h: self.meta.horizon_h,
            ports,
            legs_nm,
            demand,
            cases,
            params,
        };
        // Route plans must construct cleanly for every case so that bad
        // routes are caught at load time, with the case named.
        let names: Vec<String> = scenario.cases.keys().cloned().collect();
        for case in &names {
            scenario.route_plan(case).map_err(|e| match e {
                ScenError::Net(net) => invalid(origin, format!("cases.{case}"), net.to_string()),
                other => other,
            })?;
        }
        Ok(scenario)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_index_sets;

    const TOY: &str = r#"
        [meta]
        name = "toy-shuttle"
        horizon_h = 48.0

        [[ports]]
        name = "Alpha"
        c_port = 2.0e5
        c_el = 2.5e-8

        [[ports]]
        name = "Beta"
        c_el = 3.0e-8

        [legs]
        "1-2" = 43.0

        [demand]
        symmetric = true
        [demand.pax]
        "1-2" = 20.5
        [demand.roro]
        "1-2" = 1.2
        "2-1" = 0.8

        [cases.base]
        routes = ["1-2"]
        mode = "baseline"
        [[cases.base.pins]]
        l = 212.0
        b = 30.0
        t = 7.0
        d = 16.0
        l_sup = 150.0
        n_rt = 2
        n_vessel = 2

        [cases.opt]
        routes = ["1-2"]
        mode = "uniform"

        [params.paper]
        sigma_perm = 175.0
        [params.assumed]
        eta_prop = 0.7
        theta_u = 0.9
    "#;

    #[test]
    fn parses_a_complete_scenario() {
        let s = Scenario::parse(TOY, "inline").unwrap();
        assert_eq!(s.name, "toy-shuttle");
        assert_eq!(s.ports.len(), 2);
        assert_eq!(s.ports[1].name, "Beta");
        assert_eq!(s.ports[1].c_port, 0.0); // defaulted
        assert_eq!(s.legs_nm[&(1, 2)], 43.0);
        assert_eq!(s.t_ph(), 172_800.0);
        assert_eq!(s.n_ph(), 182.5);

        // Symmetric fill mirrors pax but keeps the explicit roro pair.
        assert_eq!(s.demand.get(1, 2, 0), 20.5);
        assert_eq!(s.demand.get(2, 1, 0), 20.5);
        assert_eq!(s.demand.get(1, 2, 1), 1.2);
        assert_eq!(s.demand.get(2, 1, 1), 0.8);

        let base = s.case("base").unwrap();
        assert_eq!(base.mode, FleetMode::Baseline);
        assert_eq!(base.pins.len(), 1);
        assert_eq!(base.pins[0].n_rt, 2.0);
        assert_eq!(s.case("opt").unwrap().mode, FleetMode::Uniform);
        assert!(matches!(s.case("nope"), Err(ScenError::UnknownCase(_))));

        assert_eq!(s.params.require("sigma_perm").unwrap(), 175.0);
        assert_eq!(s.params.provenance("sigma_perm"), Some(Provenance::Paper));
        assert_eq!(s.params.provenance("eta_prop"), Some(Provenance::Assumed));
        assert!(matches!(
            s.params.require("gone"),
            Err(ScenError::MissingParam(name)) if name == "gone"
        ));

        let plan = s.route_plan("opt").unwrap();
        let sets = build_index_sets(&plan).unwrap();
        assert_eq!(sets.legs[0], vec![(1, 2)]);
    }

    #[test]
    fn parameter_overrides_hit_only_existing_names() {
        let mut s = Scenario::parse(TOY, "inline").unwrap();
        s.params.set("eta_prop", 0.72).unwrap();
        assert_eq!(s.params.get("eta_prop"), Some(0.72));
        // Provenance survives a sweep override.
        assert_eq!(s.params.provenance("eta_prop"), Some(Provenance::Assumed));
        assert!(matches!(
            s.params.set("eta_prpo", 0.7),
            Err(ScenError::UnknownParam(name)) if name == "eta_prpo"
        ));
        let names: Vec<&str> = s.params.names().collect();
        assert_eq!(names, vec!["eta_prop", "sigma_perm", "theta_u"]);
    }

    #[test]
    fn schema_violations_carry_their_location() {
        // Unknown field: serde rejects with the key named.
        let bad = TOY.replace("horizon_h = 48.0", "horizon_h = 48.0\nbogus = 1");
        let err = Scenario::parse(&bad, "inline").unwrap_err();
        assert!(err.to_string().contains("inline"), "{err}");
        assert!(err.to_string().contains("bogus"), "{err}");

        // Port out of range in a leg key.
        let bad = TOY.replace("\"1-2\" = 43.0", "\"1-7\" = 43.0");
        let err = Scenario::parse(&bad, "inline").unwrap_err();
        assert!(err.to_string().contains("legs.1-7"), "{err}");

        // A route violating the linear port order is rejected with the
        // case named.
        let bad = TOY.replace("routes = [\"1-2\"]\n        mode = \"uniform\"",
            "routes = [\"2-1\"]\n        mode = \"uniform\"");
        let err = Scenario::parse(&bad, "inline").unwrap_err();
        assert!(err.to_string().contains("cases.opt"), "{err}");

        // Duplicate parameter across provenances.
        let bad = TOY.replace("eta_prop = 0.7", "eta_prop = 0.7\nsigma_perm = 1.0");
        let err = Scenario::parse(&bad, "inline").unwrap_err();
        assert!(err.to_string().contains("params.assumed.sigma_perm"), "{err}");

        // Baseline pin count must match the routes.
        let bad = TOY.replace(
            "routes = [\"1-2\"]\n        mode = \"baseline\"",
            "routes = [\"1-2\", \"1-2\"]\n        mode = \"baseline\"",
        );
        let err = Scenario::parse(&bad, "inline").unwrap_err();
        assert!(err.to_string().contains("one pin per route"), "{err}");

        // Pins forbidden outside baseline mode.
        let bad = TOY.replace("mode = \"uniform\"", "mode = \"mixed\"\n[[cases.opt.pins]]\nl = 1.0\nb = 1.0\nt = 1.0\nd = 1.0\nl_sup = 1.0\nn_rt = 1\nn_vessel = 1");
        let err = Scenario::parse(&bad, "inline").unwrap_err();
        assert!(err.to_string().contains("cases.opt.pins"), "{err}");

        // Fractional round-trip pin.
        let bad = TOY.replace("n_rt = 2", "n_rt = 2.5");
        let err = Scenario::parse(&bad, "inline").unwrap_err();
        assert!(err.to_string().contains("n_rt"), "{err}");
    }

    #[test]
    fn io_errors_name_the_file() {
        let err = Scenario::load("/nonexistent/zevrpp.toml").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/zevrpp.toml"), "{err}");
    }
}
