//! Mixed-integer log-convex optimization with a complete battery-electric
//! ferry fleet design model.
//!
//! The crate has two layers. The optimization layer is generic:
//!
//! * [`expr`] — an algebra of positive-variable expressions (monomials,
//!   posynomials, pointwise maxima, exponentials of monomials) that are
//!   convex after the log/log change of variables `u = log x`;
//! * [`solve`] — a primal interior-point solver for the smooth log-space
//!   problem plus branch and bound for integer variables;
//! * [`fit`] — softmax-affine and posynomial-power surrogate fitting for
//!   data that is not natively log-convex.
//!
//! The domain layer builds a fleet design problem out of those pieces:
//!
//! * [`hull`] — parametric hull geometry and hydrostatics;
//! * [`structures`] — hull girder loads, section properties and strength;
//! * [`propulsion`] — resistance, propulsion power and battery sizing;
//! * [`network`] — liner service networks, cargo flows and timing;
//! * [`model`] — the assembled mixed-integer design problem, scenario
//!   ingestion and solution validation;
//! * [`report`] — result tables in text, CSV and JSON form.
//!
//! [`verify`] runs the numerical cross-checks (quadrature, rational
//! arithmetic, fit quality) that guard the closed forms used by the model.

pub mod expr;
pub mod fit;
pub mod hull;
pub mod kv;
pub mod model;
pub mod network;
pub mod propulsion;
pub mod quad;
pub mod report;
pub mod scenario;
pub mod solve;
pub mod structures;
pub mod verify;

pub use expr::{Constraint, ConstraintForm, Expr, Monomial, Posynomial, VarId, VarKind, VarSet};
pub use fit::{fit_posynomial_power, fit_softmax_affine, FitData, PosynomialPowerFit, SoftmaxAffineFit};
pub use hull::{HullForm, HullVars};
pub use network::{DemandTable, FlowVars, IndexSets, RoutePlan, TimingParams};
pub use scenario::{FleetMode, Params, Provenance, Scenario};
pub use propulsion::{BatterySpec, BatteryVars, HollenbachTable, ResistanceParams};
pub use structures::{GirderSection, GirderVars};
pub use solve::{
    kkt_residual, solve_migp, solve_relaxation, Problem, Solution, SolveConfig, SolveError, Status,
};
