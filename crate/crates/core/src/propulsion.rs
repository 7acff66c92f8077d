//! Resistance, shaft power and battery energy as log-convex constraint
//! builders, plus the direct numeric evaluators used to cross-check them.
//!
//! Frictional resistance follows the ITTC-style line `C_F = 75/r²` with
//! `r + 2 ≤ log₁₀ Re`; the latter is a valid constraint because
//! `log₁₀ Re` is affine in the log variables while `r` enters through an
//! exponential-of-monomial term. Residual resistance uses an empirical
//! regression (see `data/hollenbach.kv`) whose standard coefficient is not
//! log-convex in the Froude number and is therefore replaced by a
//! softmax-affine surrogate fitted per block coefficient, and whose
//! above-critical speed penalty `(Fr/Fr_crit)^(Fr/Fr_crit)` is bounded by
//! a fitted posynomial-power constraint in `ρ = Fr/Fr_crit`.
//!
//! The battery block ties leg discharge energies to capacity, cell count
//! and the semi-empirical degradation law of `data/cell_lfp.kv`, which is
//! a product of a monomial power of accumulated charge and an exponential
//! of a monomial — log-convex as written.

use crate::expr::{Constraint, Expr, ExprError, Monomial, Posynomial, VarId, VarSet};
use crate::fit::{
    fit_posynomial_power, fit_softmax_affine, FitData, FitError, PosynomialPowerFit,
    SoftmaxAffineFit,
};
use crate::hull::HullVars;
use crate::kv::{KvError, KvFile};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PropError {
    #[error("coefficient table: {0}")]
    Kv(#[from] KvError),
    #[error("coefficient table needs {need} values for {name}, got {got}")]
    BadSeries { name: &'static str, need: usize, got: usize },
    #[error("standard residual coefficient is not positive at Fr = {fr:.4}, C_B = {cb:.4}")]
    NegativeCr { fr: f64, cb: f64 },
    #[error("parameter {0} must be positive and finite")]
    BadParam(&'static str),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

// ---------------------------------------------------------------------------
// Residual-resistance coefficient table.

/// Residual-resistance regression constants; see `data/hollenbach.kv`.
#[derive(Debug, Clone)]
pub struct HollenbachTable {
    pub omega: [f64; 9],
    pub kappa: [f64; 4],
    pub psi: (f64, f64),
    pub theta: [f64; 3],
    pub fr_range: (f64, f64),
    pub rho_range: (f64, f64),
}

fn fixed<const N: usize>(
    kv: &KvFile,
    name: &'static str,
) -> Result<[f64; N], PropError> {
    let v = kv.series(name)?;
    <[f64; N]>::try_from(v.as_slice())
        .map_err(|_| PropError::BadSeries { name, need: N, got: v.len() })
}

impl HollenbachTable {
    pub fn from_kv(kv: &KvFile) -> Result<Self, PropError> {
        Ok(Self {
            omega: fixed(kv, "omega")?,
            kappa: fixed(kv, "kappa")?,
            psi: (kv.get("psi1")?, kv.get("psi2")?),
            theta: fixed(kv, "theta")?,
            fr_range: (kv.get("fr_lo")?, kv.get("fr_hi")?),
            rho_range: (kv.get("rho_lo")?, kv.get("rho_hi")?),
        })
    }

    /// The coefficient set shipped with the crate.
    pub fn builtin() -> Self {
        let kv = KvFile::parse(include_str!("../data/hollenbach.kv"))
            .expect("builtin residual table parses");
        Self::from_kv(&kv).expect("builtin residual table is complete")
    }

    /// Standard coefficient quadratic in `Fr` and the block coefficient.
    pub fn cr_standard(&self, fr: f64, c_b: f64) -> f64 {
        let w = &self.omega;
        let row = |a: f64, b: f64, c: f64| a + b * fr + c * fr * fr;
        row(w[0], w[1], w[2]) + c_b * row(w[3], w[4], w[5]) + c_b * c_b * row(w[6], w[7], w[8])
    }

    /// `ω₂ + C_B ω₅ + C_B² ω₈` — negative for realistic hulls, which is
    /// what forces the surrogate fit.
    pub fn fr_linear_combo(&self, c_b: f64) -> f64 {
        self.omega[1] + c_b * self.omega[4] + c_b * c_b * self.omega[7]
    }

    /// Critical Froude number quadratic in the block coefficient.
    pub fn fr_crit(&self, c_b: f64) -> f64 {
        self.theta[0] + self.theta[1] * c_b + self.theta[2] * c_b * c_b
    }
}

/// Environment and propulsor constants joined to the coefficient table.
#[derive(Debug, Clone)]
pub struct ResistanceParams {
    pub table: HollenbachTable,
    /// Kinematic viscosity of sea water (m²/s).
    pub nu: f64,
    pub g: f64,
    /// Sea water density (kg/m³).
    pub rho_sw: f64,
    /// Unit scale applied to the friction coefficient at the resistance
    /// summation (the table keeps the classical line's 75 verbatim).
    pub cf_scale: f64,
    pub eta_prop: f64,
    /// Auxiliary (hotel) power per vessel, W.
    pub p_aux: f64,
    /// Propeller diameter, m.
    pub d_p: f64,
    /// Number of rudders.
    pub n_rud: f64,
}

impl ResistanceParams {
    pub fn baltic_defaults() -> Self {
        Self {
            table: HollenbachTable::builtin(),
            nu: 1.19e-6,
            g: 9.81,
            rho_sw: 1025.0,
            cf_scale: 1e-3,
            eta_prop: 0.7,
            p_aux: 1.0e6,
            d_p: 5.0,
            n_rud: 2.0,
        }
    }

    fn validate(&self) -> Result<(), PropError> {
        let checks = [
            (self.nu, "nu"),
            (self.g, "g"),
            (self.rho_sw, "rho_sw"),
            (self.cf_scale, "cf_scale"),
            (self.eta_prop, "eta_prop"),
            (self.d_p, "d_p"),
            (self.n_rud, "n_rud"),
        ];
        for (v, name) in checks {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PropError::BadParam(name));
            }
        }
        if !(self.p_aux >= 0.0 && self.p_aux.is_finite()) {
            return Err(PropError::BadParam("p_aux"));
        }
        Ok(())
    }
}

/// Per-block-coefficient surrogates for the residual-resistance pieces.
#[derive(Debug, Clone)]
pub struct ResistanceFits {
    pub c_b: f64,
    pub fr_crit: f64,
    /// Softmax-affine surrogate of the standard coefficient over `Fr`.
    pub cr_std: SoftmaxAffineFit,
    /// Posynomial-power bound for `ρ^ρ` over `ρ = Fr/Fr_crit`.
    pub cr_crit: PosynomialPowerFit,
}

/// Fits the two residual surrogates for a hull taper. The block
/// coefficient is constant per scenario, so both fits are one-dimensional.
pub fn resistance_fits(params: &ResistanceParams, beta: f64) -> Result<ResistanceFits, PropError> {
    params.validate()?;
    let c_b = crate::hull::block_coefficient(beta);
    let t = &params.table;
    let (lo, hi) = t.fr_range;
    // Guard positivity before handing the curve to the log-space fitter so
    // the error names the offending point.
    for i in 0..=256 {
        let fr = lo + (hi - lo) * i as f64 / 256.0;
        if !(t.cr_standard(fr, c_b) > 0.0) {
            return Err(PropError::NegativeCr { fr, cb: c_b });
        }
    }
    let std_data = FitData::sample_1d(lo, hi, 257, |fr| t.cr_standard(fr, c_b))?;
    let cr_std = fit_softmax_affine(&std_data, 3, 8)?;
    let (rlo, rhi) = t.rho_range;
    let crit_data = FitData::sample_1d(rlo, rhi, 257, |r| r.powf(r))?;
    let cr_crit = fit_posynomial_power(&crit_data, 2, (0.005, 0.5))?;
    Ok(ResistanceFits { c_b, fr_crit: t.fr_crit(c_b), cr_std, cr_crit })
}

/// Auxiliary variables and resistance monomials for one sailing
/// leg/direction.
#[derive(Debug, Clone)]
pub struct LegResistance {
    pub r_cf: VarId,
    pub c_f: VarId,
    pub r_cr_std: VarId,
    pub r_fr: VarId,
    pub c_frcrit: VarId,
    /// Frictional resistance `½ρ·s·C_F·v²·A_S`, N.
    pub r_f: Monomial,
    /// Residual resistance `C_R·(ρ/2)·v²·B·T`, N.
    pub r_r: Monomial,
    pub constraints: Vec<Constraint>,
}

/// Emits the resistance constraint block for one leg/direction: the
/// friction pair, the standard-coefficient surrogate and the critical-speed
/// epigraph, and returns the two resistance monomials.
pub fn leg_resistance(
    vars: &mut VarSet,
    hv: HullVars,
    a_s: VarId,
    v: VarId,
    params: &ResistanceParams,
    fits: &ResistanceFits,
    prefix: &str,
) -> Result<LegResistance, PropError> {
    params.validate()?;
    let r_cf = vars.var(&format!("{prefix}r_cf"));
    let c_f = vars.var(&format!("{prefix}c_f"));
    let r_cr_std = vars.var(&format!("{prefix}r_cr_std"));
    let r_fr = vars.var(&format!("{prefix}r_fr"));
    let c_frcrit = vars.var(&format!("{prefix}c_frcrit"));

    let mut cs = Vec::new();
    // C_F·r²/75 = 1.
    cs.push(Constraint::eq1(
        format!("{prefix}friction_coef"),
        Monomial::new(1.0 / 75.0, [(c_f, 1.0), (r_cf, 2.0)])?,
    ));
    // r + 2 ≤ log₁₀(vL/ν)  ⇔  100ν·v⁻¹L⁻¹·exp(ln10·r) ≤ 1.
    cs.push(Constraint::le1(
        format!("{prefix}reynolds"),
        Expr::ExpMono {
            scale: Monomial::new(100.0 * params.nu, [(v, -1.0), (hv.l, -1.0)])?,
            inner: Monomial::new(std::f64::consts::LN_10, [(r_cf, 1.0)])?,
        },
    ));

    // Softmax-affine surrogate: r_cr_std ≥ (Σ e^{αb_k} Fr^{αa_k})^{1/α}.
    let fr = Monomial::new(params.g.powf(-0.5), [(v, 1.0), (hv.l, -0.5)])?;
    let sma = &fits.cr_std;
    let mut terms = Vec::with_capacity(sma.terms());
    for k in 0..sma.terms() {
        terms.push(fr.powf(sma.alpha * sma.a[k][0]).scale((sma.alpha * sma.b[k]).exp())?);
    }
    let surrogate = Expr::Power(Box::new(Expr::Posy(Posynomial::new(terms)?)), 1.0 / sma.alpha);
    cs.push(Constraint::le1(
        format!("{prefix}cr_std_fit"),
        surrogate.mul_mono(&Monomial::new(1.0, [(r_cr_std, -1.0)])?),
    ));

    // C_R^Frcrit ≥ max{1, r^Fr} as two lower bounds on the epigraph var.
    cs.push(Constraint::ge(
        format!("{prefix}cr_crit_floor"),
        Monomial::new(1.0, [(c_frcrit, 1.0)])?,
        1.0,
    ));
    cs.push(Constraint::le1(
        format!("{prefix}cr_crit_branch"),
        Monomial::new(1.0, [(r_fr, 1.0), (c_frcrit, -1.0)])?,
    ));
    // (r^Fr)^p ≥ Σ c_j ρ^{e_j} with ρ = Fr/Fr_crit.
    let rho = fr.scale(1.0 / fits.fr_crit)?;
    let pf = &fits.cr_crit;
    let mut crit_terms = Vec::with_capacity(pf.terms.len());
    for (c, e) in &pf.terms {
        crit_terms.push(rho.powf(e[0]).scale(*c)?);
    }
    cs.push(Constraint::le1(
        format!("{prefix}cr_crit_fit"),
        Posynomial::new(crit_terms)?.mul_mono(&Monomial::new(1.0, [(r_fr, -pf.power)])?),
    ));

    let r_f = Monomial::new(
        0.5 * params.rho_sw * params.cf_scale,
        [(c_f, 1.0), (v, 2.0), (a_s, 1.0)],
    )?;
    // C_R = r_cr_std·c_frcrit·ψ₁L^{ψ₂}(T/B)^{κ₁}(B/L)^{κ₂}(D_P/T)^{κ₃}N_rud^{κ₄},
    // folded into R_R = C_R·(ρ/2)v²BT.
    let t = &params.table;
    let (k1, k2, k3, k4) = (t.kappa[0], t.kappa[1], t.kappa[2], t.kappa[3]);
    let r_r = Monomial::new(
        0.5 * params.rho_sw * t.psi.0 * params.d_p.powf(k3) * params.n_rud.powf(k4),
        [
            (r_cr_std, 1.0),
            (c_frcrit, 1.0),
            (v, 2.0),
            (hv.l, t.psi.1 - k2),
            (hv.b, 1.0 + k2 - k1),
            (hv.t, 1.0 + k1 - k3),
        ],
    )?;
    Ok(LegResistance { r_cf, c_f, r_cr_std, r_fr, c_frcrit, r_f, r_r, constraints: cs })
}

/// Shaft power `(R_F + R_R)·v/η^prop` as a posynomial.
pub fn shaft_power(
    leg: &LegResistance,
    v: VarId,
    eta_prop: f64,
) -> Result<Posynomial, PropError> {
    if !(eta_prop > 0.0 && eta_prop <= 1.0) {
        return Err(PropError::BadParam("eta_prop"));
    }
    let speed_over_eta = Monomial::new(1.0 / eta_prop, [(v, 1.0)])?;
    Ok(Posynomial::new(vec![leg.r_f.clone(), leg.r_r.clone()])?.mul_mono(&speed_over_eta))
}

/// Discharge power `b = P_shaft + P_aux`.
pub fn discharge_power(p_shaft: &Posynomial, p_aux: f64) -> Result<Posynomial, PropError> {
    if !(p_aux >= 0.0 && p_aux.is_finite()) {
        return Err(PropError::BadParam("p_aux"));
    }
    if p_aux == 0.0 {
        return Ok(p_shaft.clone());
    }
    Ok(p_shaft.add(&Posynomial::new(vec![Monomial::constant(p_aux)])?))
}

/// Classical admiralty comparator `P = P_MCR (∇/∇_ref)^{2/3} (v/v_max)³`.
pub fn admiralty_power(p_mcr: f64, disp: f64, disp_ref: f64, v: f64, v_max: f64) -> f64 {
    p_mcr * (disp / disp_ref).powf(2.0 / 3.0) * (v / v_max).powi(3)
}

// ---------------------------------------------------------------------------
// Battery sizing and degradation.

/// Cell data and degradation constants; see `data/cell_lfp.kv`.
#[derive(Debug, Clone)]
pub struct BatterySpec {
    /// Cell voltage, V.
    pub v_cell: f64,
    /// Cell capacity, coulombs.
    pub q_cell: f64,
    /// Excess capacity factor.
    pub theta: f64,
    pub eta_dis: f64,
    pub eta_cha: f64,
    pub chi: [f64; 4],
    /// Activation energy, J/mol.
    pub e_a: f64,
    /// Universal gas constant, J/(mol·K).
    pub r_g: f64,
    /// Cell temperature, K.
    pub t_c: f64,
    /// Allowed fractional capacity loss at end of battery life.
    pub phi_max: f64,
    /// Pack mass per unit energy, kg/J.
    pub rho_mass: f64,
    /// Pack volume per unit energy, m³/J.
    pub rho_vol: f64,
}

impl BatterySpec {
    pub fn from_kv(kv: &KvFile) -> Result<Self, PropError> {
        let spec = Self {
            v_cell: kv.get("v_cell")?,
            q_cell: kv.get("q_cell")?,
            theta: kv.get("theta")?,
            eta_dis: kv.get("eta_dis")?,
            eta_cha: kv.get("eta_cha")?,
            chi: fixed(kv, "chi")?,
            e_a: kv.get("e_a")?,
            r_g: kv.get("r_g")?,
            t_c: kv.get("t_c")?,
            phi_max: kv.get("phi_max")?,
            rho_mass: kv.get("rho_mass")?,
            rho_vol: kv.get("rho_vol")?,
        };
        let checks = [
            (spec.v_cell, "v_cell"),
            (spec.q_cell, "q_cell"),
            (spec.theta, "theta"),
            (spec.eta_dis, "eta_dis"),
            (spec.eta_cha, "eta_cha"),
            (spec.chi[0], "chi1"),
            (spec.e_a, "e_a"),
            (spec.r_g, "r_g"),
            (spec.t_c, "t_c"),
            (spec.phi_max, "phi_max"),
            (spec.rho_mass, "rho_mass"),
            (spec.rho_vol, "rho_vol"),
        ];
        for (v, name) in checks {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PropError::BadParam(name));
            }
        }
        Ok(spec)
    }

    /// The cell data shipped with the crate.
    pub fn builtin() -> Self {
        let kv =
            KvFile::parse(include_str!("../data/cell_lfp.kv")).expect("builtin cell data parses");
        Self::from_kv(&kv).expect("builtin cell data is complete")
    }

    /// `ξ = (χ₂ + χ₃/2)·exp(−E_A/(R_G·T_c))` — the constant factor of the
    /// degradation law under the mean-charge-0.5 assumption.
    pub fn xi(&self) -> f64 {
        (self.chi[1] + 0.5 * self.chi[2]) * (-self.e_a / (self.r_g * self.t_c)).exp()
    }
}

/// Planning-horizon bookkeeping: horizon length (s), horizons per year,
/// vessel lifetime (years).
#[derive(Debug, Clone, Copy)]
pub struct HorizonParams {
    pub t_ph: f64,
    pub n_ph: f64,
    pub t_life: f64,
}

/// The battery decision variables of one vessel class.
#[derive(Debug, Clone, Copy)]
pub struct BatteryVars {
    /// Capacity, J.
    pub q: VarId,
    pub n_cell: VarId,
    /// Per-horizon accumulated cell discharge, coulombs.
    pub r_dis: VarId,
    /// Planning horizons per battery life.
    pub n_life: VarId,
    /// Batteries bought over the vessel lifetime.
    pub n_batt: VarId,
}

pub fn battery_vars(vars: &mut VarSet, prefix: &str) -> BatteryVars {
    BatteryVars {
        q: vars.var(&format!("{prefix}q")),
        n_cell: vars.var(&format!("{prefix}n_cell")),
        r_dis: vars.var(&format!("{prefix}r_dis")),
        n_life: vars.var(&format!("{prefix}n_life")),
        n_batt: vars.var(&format!("{prefix}n_batt")),
    }
}

/// One sailing leg/direction seen by the battery: a tag for labels, the
/// discharge power posynomial and the sea-time variable.
#[derive(Debug, Clone)]
pub struct LegEnergy {
    pub tag: String,
    pub power: Posynomial,
    pub t_sea: VarId,
}

#[derive(Debug)]
pub struct BatteryBuild {
    /// Cell-current auxiliary variable per leg, in `legs` order.
    pub cell_currents: Vec<VarId>,
    pub constraints: Vec<Constraint>,
    pub warnings: Vec<String>,
}

/// Emits capacity, cell-count, degradation and replacement constraints.
pub fn battery_constraints(
    vars: &mut VarSet,
    bv: &BatteryVars,
    legs: &[LegEnergy],
    n_rt: VarId,
    spec: &BatterySpec,
    hz: &HorizonParams,
    prefix: &str,
) -> Result<BatteryBuild, PropError> {
    for (v, name) in [(hz.t_ph, "t_ph"), (hz.n_ph, "n_ph"), (hz.t_life, "t_life")] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(PropError::BadParam(name));
        }
    }
    let mut warnings = Vec::new();
    if spec.theta < 2.0 {
        warnings.push(format!(
            "excess capacity factor theta = {} is below 2; the mean-charge-0.5 \
             assumption behind the degradation law may not hold",
            spec.theta
        ));
    }
    let mut cs = Vec::new();
    let q_mono = Monomial::new(1.0, [(bv.q, 1.0)])?;
    let mut cell_currents = Vec::with_capacity(legs.len());
    let mut dis_terms = Vec::with_capacity(legs.len());
    for leg in legs {
        // Q ≥ (Θ/η_dis)·b·t_sea.
        let energy = leg
            .power
            .mul_mono(&Monomial::new(spec.theta / spec.eta_dis, [(leg.t_sea, 1.0)])?);
        cs.push(Constraint::le(format!("{prefix}capacity.{}", leg.tag), energy, &q_mono));
        // b̃ ≥ b/(V_cell·N_cell).
        let b_cell = vars.var(&format!("{prefix}b_cell.{}", leg.tag));
        let cell_current = leg
            .power
            .mul_mono(&Monomial::new(1.0 / spec.v_cell, [(bv.n_cell, -1.0), (b_cell, -1.0)])?);
        cs.push(Constraint::le1(format!("{prefix}cell_current.{}", leg.tag), cell_current));
        dis_terms.push(Monomial::new(1.0, [(b_cell, 1.0), (leg.t_sea, 1.0)])?);
        cell_currents.push(b_cell);
    }
    // Q = Q̃·V_cell·N_cell.
    cs.push(Constraint::eq1(
        format!("{prefix}cells"),
        Monomial::new(1.0 / (spec.q_cell * spec.v_cell), [(bv.q, 1.0), (bv.n_cell, -1.0)])?,
    ));
    // r_dis ≥ Σ b̃·t_sea over both directions of every leg.
    if !dis_terms.is_empty() {
        cs.push(Constraint::le(
            format!("{prefix}discharge"),
            Posynomial::new(dis_terms)?,
            &Monomial::new(1.0, [(bv.r_dis, 1.0)])?,
        ));
    }
    // φ_max ≥ (N_life·N_rt·2r_dis)^{χ₁}·ξ·exp(2χ₄·N_rt·r_dis/(R_G·T_c·Q̃·t_ph)).
    let chi1 = spec.chi[0];
    let scale = Monomial::new(
        2.0_f64.powf(chi1) * spec.xi() / spec.phi_max,
        [(bv.n_life, chi1), (n_rt, chi1), (bv.r_dis, chi1)],
    )?;
    let inner = Monomial::new(
        2.0 * spec.chi[3] / (spec.r_g * spec.t_c * spec.q_cell * hz.t_ph),
        [(n_rt, 1.0), (bv.r_dis, 1.0)],
    )?;
    cs.push(Constraint::le1(format!("{prefix}cap_loss"), Expr::ExpMono { scale, inner }));
    // N_batt ≥ max{1, lifetime horizons / battery-life horizons}.
    cs.push(Constraint::ge(
        format!("{prefix}batteries_floor"),
        Monomial::new(1.0, [(bv.n_batt, 1.0)])?,
        1.0,
    ));
    cs.push(Constraint::le1(
        format!("{prefix}batteries_life"),
        Monomial::new(hz.t_life * hz.n_ph, [(bv.n_life, -1.0), (bv.n_batt, -1.0)])?,
    ));
    Ok(BatteryBuild { cell_currents, constraints: cs, warnings })
}

/// Pack mass `ρ_mass·Q` as a monomial of the capacity variable.
pub fn battery_mass(spec: &BatterySpec, q: VarId) -> Result<Monomial, PropError> {
    Ok(Monomial::new(spec.rho_mass, [(q, 1.0)])?)
}

// ---------------------------------------------------------------------------
// Direct numeric degradation evaluation.

/// One phase of a repeating cell duty cycle: signed current (A) held for a
/// duration (s).
#[derive(Debug, Clone, Copy)]
pub struct CyclePhase {
    pub current: f64,
    pub duration: f64,
}

/// Evaluates the fractional capacity loss `φ(t)` for a cyclically repeated
/// duty profile, with the mean normalized charge fixed at 0.5.
pub fn capacity_loss_eval(profile: &[CyclePhase], spec: &BatterySpec, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let cycle: f64 = profile.iter().map(|p| p.duration).sum();
    let per_cycle: f64 = profile.iter().map(|p| p.current.abs() * p.duration).sum();
    if cycle <= 0.0 {
        return 0.0;
    }
    let full = (t / cycle).floor();
    let mut gamma_acc = full * per_cycle;
    let mut rem = t - full * cycle;
    for p in profile {
        if rem <= 0.0 {
            break;
        }
        let dt = rem.min(p.duration);
        gamma_acc += p.current.abs() * dt;
        rem -= dt;
    }
    if gamma_acc <= 0.0 {
        return 0.0;
    }
    let gamma_cur = gamma_acc / (spec.q_cell * t);
    gamma_acc.powf(spec.chi[0])
        * (spec.chi[1] + 0.5 * spec.chi[2])
        * ((-spec.e_a + spec.chi[3] * gamma_cur) / (spec.r_g * spec.t_c)).exp()
}

/// CSV table of the loss curve: `t_hours,phi` rows on an even grid.
pub fn capacity_loss_curve_csv(
    profile: &[CyclePhase],
    spec: &BatterySpec,
    t_end: f64,
    n: usize,
) -> String {
    let mut out = String::from("t_hours,phi\n");
    for i in 0..n {
        let t = t_end * (i + 1) as f64 / n as f64;
        out.push_str(&format!("{},{}\n", t / 3600.0, capacity_loss_eval(profile, spec, t)));
    }
    out
}
