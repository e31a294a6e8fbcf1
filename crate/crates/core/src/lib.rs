//! Parameter-free adaptive proximal bundle methods for hybrid convex
//! composite optimization.
//!
//! The problem class is `min { φ(x) = f(x) + h(x) }` where `f` is convex with a
//! subgradient oracle whose variation is bounded by `2M + L‖x − y‖`, and `h`
//! is a simple closed convex term (here: the zero function, the nonnegative
//! orthant indicator, or a box indicator).
//!
//! The crate is organised bottom-up:
//!
//! * [`problem`]: oracles, the simple term `h`, cuts and composite evaluation.
//! * [`bundle`]: two-cut and multi-cut bundle models and their update step.
//! * [`proxsolver`]: solvers for the prox bundle subproblem.
//! * [`driver`]: the adaptive bundle state machine and its variants
//!   (Ad-GPB, Ad-GPB*, Ad-GPB**, GPB, Polyak-seeded cycles, Polyak subgradient).
//! * [`instances`]: reproducible ℓ₁ feasibility instances and their constants.
//! * [`theory`]: evaluators for the complexity ceilings.
//! * [`harness`]: experiment configuration, records, tables and trace verification.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod driver;
pub mod harness;
pub mod instances;
pub mod linalg;
pub mod problem;
pub mod proxsolver;
pub mod theory;

pub use bundle::{AggregateCut, BundleModel, MultiCutModel, TwoCutModel};
pub use driver::{run, RunReport, SolverConfig, Variant};
pub use instances::{Instance, InstanceConstants};
pub use problem::{CompositeObjective, Cut, FirstOrderOracle, FirstOrderResult, SimpleTerm};
pub use proxsolver::SubproblemSolution;
