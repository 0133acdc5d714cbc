//! Newton-CG barrier method for approximate second-order stationary points
//! of nonconvex conic programs `min f(x) s.t. Ax = b, x ∈ K`, where `K` is a
//! product of nonnegative orthants and second-order cones.
//!
//! The crate is organised around the solver loop in [`ncgb`]:
//!
//! - [`cones`]: barrier values, derivatives and Hessian factors.
//! - [`linops`]: the preconditioned null-space operators at an iterate.
//! - [`capped_cg`]: capped conjugate gradient for damped Newton systems.
//! - [`meo`]: randomized Lanczos minimum eigenvalue oracle.
//! - [`certify`]: independent dense checks of stationarity.
//! - [`problems`]: objectives, builtin instances and the JSON format.

// NaN must fail these positivity checks, so `!(a > b)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capped_cg;
pub mod certify;
pub mod cones;
pub mod counters;
mod dense;
pub mod error;
pub mod linops;
pub mod meo;
pub mod ncgb;
pub mod problems;
pub mod sweep;
pub mod trace;

pub use capped_cg::{capped_cg, CappedCgParams, CappedCgResult, DirectionType};
pub use certify::{check_fosp, check_sosp_dense, CertificateReport, Tolerances};
pub use cones::{BarrierFactor, Cone, ConeBlock};
pub use counters::{CounterSnapshot, OpCounters};
pub use error::{Error, Result};
pub use linops::{build_workspace, AffineData, IterationWorkspace};
pub use meo::{min_eig_oracle, MeoKind, MeoOutcome, RngSeed};
pub use ncgb::{solve, solve_with_counters, SolveResult, SolveStatus, SolverParams};
pub use problems::{builtin, load_problem, parse_problem, save_problem, ConicProblem, Objective};
pub use sweep::{sweep, SweepReport, SweepRow};
pub use trace::{Branch, IterationRecord, SolveTrace};
