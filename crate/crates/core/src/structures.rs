//! Hull-girder global strength: still-water load distributions, rule design
//! loads, midship section properties, shear flow, and the two strength
//! constraints.
//!
//! The midship section is a fixed topology (bottom, inner bottom, ro-ro
//! deck, top deck, two side plates, one centreline bulkhead) whose plate
//! thicknesses are tied to the top-deck thickness by fixed ratios. Its
//! neutral axis, bending inertia and peak shear flow then reduce to exact
//! rational multiples of the principal dimensions; the rationals are derived
//! here by exact fraction arithmetic over the element table rather than
//! hard-coded, so the monomial coefficients used in constraints are checked
//! against a genuinely independent computation.
//!
//! Loads come in two forms: closed rule formulas (still-water and wave
//! bending moment and shear, with the governing sagging/hogging case chosen
//! by coefficient comparison) used in the constraints, and a numeric
//! still-water integrator over explicit weight blocks used to sanity-check
//! the rule values.

use crate::expr::{Constraint, ExprError, Monomial, VarId};
use crate::hull::{self, HullForm};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StructError {
    #[error("girder dimensions must be positive and finite")]
    BadDimensions,
    #[error("need at least two stations, got {0}")]
    TooFewStations(usize),
    #[error("profile lengths must match the station grid")]
    MismatchedProfiles,
    #[error("weight block [{start}, {end}] is empty or outside the hull")]
    BadBlock { start: f64, end: f64 },
    #[error(
        "load case does not close: residual shear {shear:.3e}, residual moment {moment:.3e} \
         (as fractions of the respective maxima)"
    )]
    Unbalanced { shear: f64, moment: f64 },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

// Rule-load coefficients (paper-unit system; a single configurable scale
// factor converts the resulting stresses, see `StrengthLimits`).
const SW_MOMENT_COEF: f64 = 0.0472;
const WV_MOMENT_COEF: f64 = 0.975;
const SAG_FACTOR: f64 = 1.1;
const WV_SHEAR_COEF: f64 = 0.3;
/// Still-water shear peaks near the quarter points at `1.6·M_sw/L` for the
/// parabolic still-water moment shape.
const SW_SHEAR_FACTOR: f64 = 1.6;

/// Wave bending factors `(sagging, hogging)` as multiples of
/// `0.975·L²·B·(C_B+0.7)`.
pub fn wave_phi(c_b: f64) -> (f64, f64) {
    (SAG_FACTOR, 1.9 * c_b / (c_b + 0.7))
}

/// Design vertical bending moment: still-water plus the governing wave case.
pub fn design_moment(l: f64, b: f64, c_b: f64) -> f64 {
    let (sag, hog) = wave_phi(c_b);
    let wave = WV_MOMENT_COEF * sag.max(hog);
    (SW_MOMENT_COEF + wave) * l * l * b * (c_b + 0.7)
}

/// Design vertical shear force at the quarter-point region.
pub fn design_shear(l: f64, b: f64, c_b: f64) -> f64 {
    (SW_SHEAR_FACTOR * SW_MOMENT_COEF + WV_SHEAR_COEF) * l * b * (c_b + 0.7)
}

/// Design loads as monomials of the length and beam variables; the block
/// coefficient is a constant of the section taper.
pub fn design_loads(
    l: VarId,
    b: VarId,
    beta: f64,
) -> Result<(Monomial, Monomial), StructError> {
    let c_b = hull::block_coefficient(beta);
    let (sag, hog) = wave_phi(c_b);
    let m_coef = (SW_MOMENT_COEF + WV_MOMENT_COEF * sag.max(hog)) * (c_b + 0.7);
    let v_coef = (SW_SHEAR_FACTOR * SW_MOMENT_COEF + WV_SHEAR_COEF) * (c_b + 0.7);
    Ok((
        Monomial::new(m_coef, [(l, 2.0), (b, 1.0)])?,
        Monomial::new(v_coef, [(l, 1.0), (b, 1.0)])?,
    ))
}

/// Numeric midship girder section. Plate thicknesses are fixed ratios of
/// the top-deck thickness: side `B·p/(2D)`, bulkhead twice the side, bottom
/// two thirds of the deck.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GirderSection {
    pub b: f64,
    pub d: f64,
    pub p_td: f64,
}

impl GirderSection {
    pub fn new(b: f64, d: f64, p_td: f64) -> Result<Self, StructError> {
        for v in [b, d, p_td] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(StructError::BadDimensions);
            }
        }
        Ok(Self { b, d, p_td })
    }

    pub fn p_sp(&self) -> f64 {
        self.b * self.p_td / (2.0 * self.d)
    }

    pub fn p_bh(&self) -> f64 {
        2.0 * self.p_sp()
    }

    pub fn p_bp(&self) -> f64 {
        2.0 / 3.0 * self.p_td
    }

    /// Height of the neutral axis above the keel, `2D/5`.
    pub fn neutral_axis(&self) -> f64 {
        0.4 * self.d
    }

    /// Bending inertia about the neutral axis, `(133/150)·p·B·D²`.
    pub fn inertia(&self) -> f64 {
        133.0 / 150.0 * self.p_td * self.b * self.d * self.d
    }

    /// Section modulus at the deck, the farthest fibre: `5Ĩ/(3D)`.
    pub fn modulus_deck(&self) -> f64 {
        133.0 / 90.0 * self.p_td * self.b * self.d
    }

    /// Peak shear flow magnitude per unit shear force, `(53/200)·B·D·p/Ĩ`,
    /// which the inertia reduces to `(159/532)/D`.
    pub fn shear_flow_per_force(&self) -> f64 {
        159.0 / 532.0 / self.d
    }
}

/// The section's symbolic dimensions: beam, depth and top-deck thickness.
#[derive(Debug, Clone, Copy)]
pub struct GirderVars {
    pub b: VarId,
    pub d: VarId,
    pub p_td: VarId,
}

pub fn neutral_axis_monomial(gv: GirderVars) -> Result<Monomial, StructError> {
    Ok(Monomial::new(0.4, [(gv.d, 1.0)])?)
}

pub fn section_inertia_monomial(gv: GirderVars) -> Result<Monomial, StructError> {
    Ok(Monomial::new(
        133.0 / 150.0,
        [(gv.p_td, 1.0), (gv.b, 1.0), (gv.d, 2.0)],
    )?)
}

pub fn section_modulus_monomial(gv: GirderVars) -> Result<Monomial, StructError> {
    Ok(Monomial::new(
        133.0 / 90.0,
        [(gv.p_td, 1.0), (gv.b, 1.0), (gv.d, 1.0)],
    )?)
}

/// Peak shear flow per unit shear force as a monomial, `(159/532)·D⁻¹`.
pub fn shear_flow_monomial(gv: GirderVars) -> Result<Monomial, StructError> {
    Ok(Monomial::new(159.0 / 532.0, [(gv.d, -1.0)])?)
}

/// Permissible stresses and the scale factor from rule-load units to the
/// stress units of the limits.
#[derive(Debug, Clone, Copy)]
pub struct StrengthLimits {
    pub sigma_perm: f64,
    pub tau_perm: f64,
    pub stress_scale: f64,
}

/// The two girder strength constraints: deck bending stress
/// `M_des/Z_deck ≤ σ` and neutral-axis shear stress
/// `q_max·V_des/p_sp ≤ τ`. Both reduce to clean monomials — the beam
/// cancels out of each.
pub fn strength_constraints(
    gv: GirderVars,
    l: VarId,
    beta: f64,
    lim: &StrengthLimits,
    prefix: &str,
) -> Result<Vec<Constraint>, StructError> {
    for v in [lim.sigma_perm, lim.tau_perm, lim.stress_scale] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(StructError::BadDimensions);
        }
    }
    let (m_des, v_des) = design_loads(l, gv.b, beta)?;
    let bending = m_des
        .mul(&section_modulus_monomial(gv)?.recip())
        .scale(lim.stress_scale / lim.sigma_perm)?;
    let shear = shear_flow_monomial(gv)?
        .mul(&v_des)
        // divide by the side-plate thickness p_sp = B·p/(2D)
        .mul(&Monomial::new(2.0, [(gv.b, -1.0), (gv.p_td, -1.0), (gv.d, 1.0)])?)
        .scale(lim.stress_scale / lim.tau_perm)?;
    Ok(vec![
        Constraint::le1(format!("{prefix}bending"), bending),
        Constraint::le1(format!("{prefix}shear"), shear),
    ])
}

// ---------------------------------------------------------------------------
// Exact rational oracles over the element tables.

/// Reduced fraction with exact arithmetic; panics on overflow, which the
/// small tables cannot reach.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Frac {
    n: i64,
    d: i64,
}

impl Frac {
    fn new(n: i64, d: i64) -> Self {
        assert!(d != 0, "zero denominator");
        let s = if d < 0 { -1 } else { 1 };
        let g = gcd(n.unsigned_abs(), d.unsigned_abs()).max(1) as i64;
        Self { n: s * n / g, d: s * d / g }
    }

    fn add(self, o: Self) -> Self {
        Self::new(self.n * o.d + o.n * self.d, self.d * o.d)
    }

    fn sub(self, o: Self) -> Self {
        self.add(Self::new(-o.n, o.d))
    }

    fn mul(self, o: Self) -> Self {
        Self::new(self.n * o.n, self.d * o.d)
    }

    fn div(self, o: Self) -> Self {
        self.mul(Self::new(o.d, o.n))
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// One midship structural element: `count` copies with area `a` (in `p·B`),
/// centroid height `z` (in `D`) and own inertia `i0` (in `p·B·D²`).
struct Element {
    count: i64,
    a: Frac,
    z: Frac,
    i0: Frac,
}

/// The midship element table. Horizontal plates carry no own inertia; the
/// vertical side plates (thickness `B·p/(2D)`) and the centreline bulkhead
/// (twice that) carry `t·D³/12` each, which reduces to `p·B·D²/24` and
/// `p·B·D²/12`.
fn element_table() -> Vec<Element> {
    let f = Frac::new;
    vec![
        // bottom shell with its double-plate keel strip: 3/2·p·B at the keel
        Element { count: 1, a: f(3, 2), z: f(0, 1), i0: f(0, 1) },
        Element { count: 1, a: f(1, 1), z: f(1, 10), i0: f(0, 1) }, // inner bottom
        Element { count: 1, a: f(1, 1), z: f(1, 2), i0: f(0, 1) },  // ro-ro deck
        Element { count: 1, a: f(1, 1), z: f(1, 1), i0: f(0, 1) },  // top deck
        Element { count: 2, a: f(1, 2), z: f(1, 2), i0: f(1, 24) }, // side plates
        Element { count: 1, a: f(1, 1), z: f(1, 2), i0: f(1, 12) }, // cl. bulkhead
    ]
}

fn neutral_axis_frac() -> Frac {
    let table = element_table();
    let mut num = Frac::new(0, 1);
    let mut den = Frac::new(0, 1);
    for e in &table {
        let n = Frac::new(e.count, 1);
        num = num.add(n.mul(e.a).mul(e.z));
        den = den.add(n.mul(e.a));
    }
    num.div(den)
}

/// Neutral-axis height as an exact fraction of `D`, from the element table.
pub fn neutral_axis_oracle() -> (i64, i64) {
    let f = neutral_axis_frac();
    (f.n, f.d)
}

/// Bending inertia as an exact fraction of `p·B·D²`, from the parallel-axis
/// sum over the element table.
pub fn inertia_oracle() -> (i64, i64) {
    let z_na = neutral_axis_frac();
    let mut total = Frac::new(0, 1);
    for e in &element_table() {
        let n = Frac::new(e.count, 1);
        let dz = e.z.sub(z_na);
        total = total.add(n.mul(e.i0.add(e.a.mul(dz).mul(dz))));
    }
    (total.n, total.d)
}

/// Peak shear-flow magnitude per unit shear force as an exact fraction of
/// `p·B·D/Ĩ`, from chaining the line-segment recursion
/// `q_j = −(p·l/(2Ĩ))(z_i + z_j − 2·z_NA) + q_i` over the half-section:
/// deck edge to the side/bulkhead junction, down the side plate, the deck
/// run from the centreline (starting at zero by symmetry), and finally the
/// side plate down to the neutral axis. The units reduce so every
/// `p·l` product is a fraction of `p·B`.
pub fn shear_flow_oracle() -> (i64, i64) {
    let f = Frac::new;
    let z_na = neutral_axis_frac();
    let step = |q: Frac, pl: Frac, zi: Frac, zj: Frac| {
        q.sub(pl.mul(zi.add(zj).sub(z_na.mul(f(2, 1)))).div(f(2, 1)))
    };
    // deck edge → side top: deck plate p over B/4
    let q_side_top = step(f(0, 1), f(1, 4), f(1, 1), f(1, 1));
    // side top → ro-ro level: side plate (p·B/2D) over D/2 → p·B/4
    let q_side_mid = step(q_side_top, f(1, 4), f(1, 1), f(1, 2));
    // centreline → same junction along the ro-ro deck, starting at zero
    let q_deck_mid = step(f(0, 1), f(1, 4), f(1, 2), f(1, 2));
    // junction sums the incoming flows, then side plate down to the
    // neutral axis: (p·B/2D) over D/10 → p·B/20
    let q_e = step(q_side_mid.add(q_deck_mid), f(1, 20), f(1, 2), z_na);
    let mag = f(-q_e.n, q_e.d);
    (mag.n, mag.d)
}

// ---------------------------------------------------------------------------
// Numeric still-water load integration.

/// A weight component spread uniformly between two stations (from the bow).
#[derive(Debug, Clone)]
pub struct WeightBlock {
    pub label: String,
    pub weight: f64,
    pub start: f64,
    pub end: f64,
}

impl WeightBlock {
    pub fn new(label: impl Into<String>, weight: f64, start: f64, end: f64) -> Self {
        Self { label: label.into(), weight, start, end }
    }
}

/// Still-water shear and bending distributions on a station grid.
#[derive(Debug, Clone)]
pub struct LoadDistribution {
    pub stations: Vec<f64>,
    pub weight: Vec<f64>,
    pub buoyancy: Vec<f64>,
    pub shear: Vec<f64>,
    pub moment: Vec<f64>,
}

impl LoadDistribution {
    pub fn max_shear(&self) -> f64 {
        self.shear.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_moment(&self) -> f64 {
        self.moment.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// CSV dump with one row per station.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("station,weight,buoyancy,shear,moment\n");
        for i in 0..self.stations.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.stations[i], self.weight[i], self.buoyancy[i], self.shear[i], self.moment[i]
            ));
        }
        out
    }
}

/// Integrates per-length weight and buoyancy profiles into shear and moment
/// by cumulative trapezoids and checks endpoint closure against
/// `closure_tol` (a fraction of the respective maxima; pass infinity to
/// skip, e.g. for deliberately unbalanced test beams).
pub fn distribution_from_profiles(
    stations: Vec<f64>,
    weight: Vec<f64>,
    buoyancy: Vec<f64>,
    closure_tol: f64,
) -> Result<LoadDistribution, StructError> {
    let n = stations.len();
    if n < 2 {
        return Err(StructError::TooFewStations(n));
    }
    if weight.len() != n || buoyancy.len() != n {
        return Err(StructError::MismatchedProfiles);
    }
    let mut shear = vec![0.0; n];
    let mut moment = vec![0.0; n];
    for i in 1..n {
        let h = stations[i] - stations[i - 1];
        let net = |j: usize| weight[j] - buoyancy[j];
        shear[i] = shear[i - 1] + 0.5 * h * (net(i - 1) + net(i));
        moment[i] = moment[i - 1] + 0.5 * h * (shear[i - 1] + shear[i]);
    }
    let dist = LoadDistribution { stations, weight, buoyancy, shear, moment };
    let vmax = dist.max_shear();
    let mmax = dist.max_moment();
    let sv = if vmax > 0.0 { dist.shear[n - 1].abs() / vmax } else { 0.0 };
    let sm = if mmax > 0.0 { dist.moment[n - 1].abs() / mmax } else { 0.0 };
    if sv > closure_tol || sm > closure_tol {
        return Err(StructError::Unbalanced { shear: sv, moment: sm });
    }
    Ok(dist)
}

/// Still-water loads for a hull and a set of weight blocks. The buoyancy
/// profile follows the section areas of the offsets and is scaled so the
/// grid totals of weight and buoyancy match exactly; moment closure then
/// measures how far the weight centroid sits from the buoyancy centroid.
pub fn stillwater_distribution(
    hull: &HullForm,
    blocks: &[WeightBlock],
    n_stations: usize,
    closure_tol: f64,
) -> Result<LoadDistribution, StructError> {
    if n_stations < 2 {
        return Err(StructError::TooFewStations(n_stations));
    }
    let l = hull.l;
    let stations: Vec<f64> =
        (0..n_stations).map(|i| l * i as f64 / (n_stations - 1) as f64).collect();
    // Each station represents the dual cell [y−h/2, y+h/2] (half cells at
    // the ends, matching the trapezoid weights), and a block deposits its
    // exact overlap with each cell. Grid totals then equal the block
    // weights exactly and centroids vary continuously with block edges.
    let h = l / (n_stations - 1) as f64;
    let mut weight = vec![0.0; n_stations];
    for bl in blocks {
        if !(bl.weight > 0.0) || !(bl.start >= 0.0 && bl.end > bl.start && bl.end <= l) {
            return Err(StructError::BadBlock { start: bl.start, end: bl.end });
        }
        let per_len = bl.weight / (bl.end - bl.start);
        for (i, &y) in stations.iter().enumerate() {
            let lo = (y - 0.5 * h).max(0.0);
            let hi = (y + 0.5 * h).min(l);
            let overlap = (hi.min(bl.end) - lo.max(bl.start)).max(0.0);
            weight[i] += per_len * overlap / (hi - lo);
        }
    }
    // Submerged section area from the offsets: fore √-waterlines, aft
    // sections whose taper sharpens toward the stern.
    let beta = hull.beta;
    let section_area = |y: f64| {
        if y <= l / 2.0 {
            hull.b * hull.t * beta / (beta + 1.0) * (2.0 * y / l).sqrt()
        } else {
            let u = 1.0 - 2.0 * (y - l / 2.0) / l;
            let bu = beta * u;
            hull.b * hull.t * bu / (bu + 1.0)
        }
    };
    let shape: Vec<f64> = stations.iter().map(|&y| section_area(y)).collect();
    let trap = |v: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 1..v.len() {
            s += 0.5 * (stations[i] - stations[i - 1]) * (v[i] + v[i - 1]);
        }
        s
    };
    let total_w = trap(&weight);
    let total_shape = trap(&shape);
    if !(total_w > 0.0 && total_shape > 0.0) {
        return Err(StructError::BadDimensions);
    }
    let buoyancy: Vec<f64> = shape.iter().map(|a| a * total_w / total_shape).collect();
    distribution_from_profiles(stations, weight, buoyancy, closure_tol)
}
