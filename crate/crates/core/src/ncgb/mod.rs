//! Newton-CG barrier method for approximate second-order stationary points
//! of `min f(x) s.t. Ax = b, x ∈ K`.
//!
//! Each iteration works with `φ_μ = f + μB` at a fixed `μ` derived from `ε`.
//! Two multiplier estimates feed a first-order gate. While the gate fails,
//! capped CG on the preconditioned damped Newton system supplies either a
//! solution step or a negative-curvature step. Once it passes, the
//! randomized eigenvalue oracle either certifies approximate second-order
//! stationarity (and the method stops) or yields a curvature direction.
//! All steps have the form `x⁺ = x + αPd` and stay in `{Ax = b}`.

mod directions;
mod line_search;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::capped_cg::{capped_cg, nc_curvature, CappedCgParams, DirectionType};
use crate::cones::INTERNAL_MARGIN;
use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::linops::{build_workspace, IterationWorkspace};
use crate::meo::{min_eig_oracle, MeoKind, RngSeed};
use crate::problems::{ConicProblem, Objective};
use crate::trace::{Branch, IterationRecord, SolveTrace};

pub use directions::{scale_meo_direction, scale_nc_direction, scale_sol_direction, sgn};
pub use line_search::{
    backtrack, barrier_objective, line_search_nc, line_search_sol, LineSearchOutcome,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub epsilon: f64,
    pub zeta: f64,
    pub beta: f64,
    pub theta: f64,
    pub eta: f64,
    pub delta: f64,
    pub max_outer_iters: usize,
    pub max_backtracks: usize,
    pub feas_tol: f64,
    pub seed: RngSeed,
    /// Stop at the first iterate passing the first-order gate.
    pub fosp_only: bool,
    /// Keep every iterate in the result.
    pub record_iterates: bool,
}

impl SolverParams {
    /// Defaults for tolerance `epsilon`; `β = max(√ε, 0.5)`.
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            zeta: 0.5,
            beta: epsilon.sqrt().max(0.5),
            theta: 0.5,
            eta: 0.2,
            delta: 0.01,
            max_outer_iters: 100_000,
            max_backtracks: 60,
            feas_tol: 1e-9,
            seed: RngSeed(0),
            fosp_only: false,
            record_iterates: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let open = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::Param(format!("{name} = {v} not in (0,1)")))
            }
        };
        open("epsilon", self.epsilon)?;
        open("zeta", self.zeta)?;
        open("theta", self.theta)?;
        open("eta", self.eta)?;
        open("delta", self.delta)?;
        if !(self.beta >= self.epsilon.sqrt() && self.beta < 1.0) {
            return Err(Error::Param(format!(
                "beta = {} not in [sqrt(epsilon), 1) = [{}, 1)",
                self.beta,
                self.epsilon.sqrt()
            )));
        }
        if !(self.feas_tol > 0.0) {
            return Err(Error::Param(format!(
                "feas_tol = {} must be positive",
                self.feas_tol
            )));
        }
        Ok(())
    }
}

/// `μ = (1-β)ε / (2((1-β)² + √ϑ))`.
pub fn mu_from_epsilon(eps: f64, beta: f64, theta_barrier: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Param(format!("epsilon = {eps} not in (0,1)")));
    }
    if !(beta >= eps.sqrt() && beta < 1.0) {
        return Err(Error::Param(format!(
            "beta = {beta} not in [sqrt(epsilon), 1)"
        )));
    }
    if !(theta_barrier >= 1.0) {
        return Err(Error::Param(format!(
            "barrier parameter {theta_barrier} below 1"
        )));
    }
    let w = 1.0 - beta;
    Ok(w * eps / (2.0 * (w * w + theta_barrier.sqrt())))
}

fn objective_gradient(
    problem: &ConicProblem,
    x: &DVector<f64>,
    counters: &OpCounters,
) -> Result<DVector<f64>> {
    counters.add_grad_eval(1);
    let g = problem.objective().gradient(x);
    if g.len() != problem.n() {
        return Err(Error::Dimension {
            what: "objective gradient",
            expected: problem.n(),
            got: g.len(),
        });
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteEvaluation);
    }
    Ok(g)
}

/// `∇f(x) + μ∇B(x)` at the workspace point.
pub fn grad_phi(problem: &ConicProblem, ws: &IterationWorkspace, mu: f64) -> Result<DVector<f64>> {
    let gf = objective_gradient(problem, ws.point(), ws.counters())?;
    let gb = problem.cone().barrier_gradient(ws.point())?;
    Ok(gf + gb * mu)
}

/// `λ⁽¹⁾ = R ∇φ_μ(x)`.
pub fn multiplier_first(ws: &IterationWorkspace, grad_phi_val: &DVector<f64>) -> DVector<f64> {
    ws.apply_r(grad_phi_val)
}

/// `λ⁽²⁾ = R(∇²f P d + ∇φ_μ)` with all quantities at the previous iterate;
/// `hess_vec_prev` evaluates `∇²f` there.
pub fn multiplier_second<F>(
    ws_prev: &IterationWorkspace,
    hess_vec_prev: F,
    d_prev: &DVector<f64>,
    grad_phi_prev: &DVector<f64>,
) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let hpd = hess_vec_prev(&ws_prev.apply_p(d_prev));
    ws_prev.counters().add_hess_vec(1);
    ws_prev.apply_r(&(hpd + grad_phi_prev))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MultiplierChoice {
    Lambda1,
    Lambda2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateDecision {
    pub triggered: bool,
    pub which: MultiplierChoice,
    pub residual: f64,
}

/// The gate passes when `min(r1, r2) ≤ threshold`; ties pick `λ⁽¹⁾`.
pub fn gate_decision(r1: f64, r2: f64, threshold: f64) -> GateDecision {
    let (which, residual) = if r1 <= r2 {
        (MultiplierChoice::Lambda1, r1)
    } else {
        (MultiplierChoice::Lambda2, r2)
    };
    GateDecision {
        triggered: residual <= threshold,
        which,
        residual,
    }
}

/// Both gate residuals, measured in the dual local norm at the workspace
/// point. The second uses the barrier gradient from the previous iterate.
#[allow(clippy::too_many_arguments)]
pub fn fosp_gate(
    problem: &ConicProblem,
    ws: &IterationWorkspace,
    grad_f: &DVector<f64>,
    grad_b: &DVector<f64>,
    grad_b_prev: &DVector<f64>,
    lambda1: &DVector<f64>,
    lambda2: &DVector<f64>,
    mu: f64,
    beta: f64,
) -> GateDecision {
    let at = problem.affine().a().transpose();
    let s1 = grad_f + &at * lambda1 + grad_b * mu;
    let s2 = grad_f + &at * lambda2 + grad_b_prev * mu;
    let r1 = ws.factor().local_norm_dual(&s1);
    let r2 = ws.factor().local_norm_dual(&s2);
    gate_decision(r1, r2, (1.0 - beta) * mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    SospCertified,
    FospCertified,
    MaxItersExceeded,
    LineSearchFailure,
}

impl SolveStatus {
    pub fn is_certified(&self) -> bool {
        matches!(
            self,
            SolveStatus::SospCertified | SolveStatus::FospCertified
        )
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x_final: DVector<f64>,
    pub lambda_final: DVector<f64>,
    pub status: SolveStatus,
    /// Oracle confidence in the second-order certificate.
    pub probability_bound: Option<f64>,
    /// Number of steps taken.
    pub iterations: usize,
    pub mu: f64,
    pub trace: SolveTrace,
    /// `x⁰, x¹, …` when requested.
    pub iterates: Vec<DVector<f64>>,
}

/// `∇²f(x)` as a dense matrix when the objective supplies one, otherwise
/// through its product callback.
struct LocalHessian<'a> {
    objective: &'a dyn Objective,
    x: &'a DVector<f64>,
    dense: Option<DMatrix<f64>>,
}

impl<'a> LocalHessian<'a> {
    fn new(objective: &'a dyn Objective, x: &'a DVector<f64>) -> Self {
        let dense = objective.hessian(x);
        Self {
            objective,
            x,
            dense,
        }
    }

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.dense {
            Some(h) => h * v,
            None => self.objective.hess_vec(self.x, v),
        }
    }
}

pub fn solve(
    problem: &ConicProblem,
    x0: &DVector<f64>,
    params: &SolverParams,
) -> Result<SolveResult> {
    solve_with_counters(problem, x0, params, &Arc::new(OpCounters::new()))
}

/// As [`solve`], charging operations to `counters`. The trace reports the
/// change in `counters` over the call, which includes any concurrent use
/// of the same handle.
pub fn solve_with_counters(
    problem: &ConicProblem,
    x0: &DVector<f64>,
    params: &SolverParams,
    counters: &Arc<OpCounters>,
) -> Result<SolveResult> {
    params.validate()?;
    let n = problem.n();
    let cone = problem.cone();
    let affine = problem.affine();
    let objective = problem.objective().as_ref();
    if x0.len() != n {
        return Err(Error::Dimension {
            what: "x0",
            expected: n,
            got: x0.len(),
        });
    }
    if !cone.interior_membership(x0, INTERNAL_MARGIN) {
        return Err(Error::InfeasibleStart("x0 is not strictly interior".into()));
    }
    let feas = affine.scaled_tol(params.feas_tol);
    let res0 = affine.residual_inf(x0);
    if !(res0 <= feas) {
        return Err(Error::InfeasibleStart(format!(
            "‖Ax0 - b‖∞ = {res0:e} exceeds {feas:e}"
        )));
    }

    let start = counters.snapshot();
    let mu = mu_from_epsilon(params.epsilon, params.beta, cone.theta())?;
    let sqrt_eps = params.epsilon.sqrt();
    let cg_params = CappedCgParams::new(sqrt_eps, params.zeta);

    let mut x = x0.clone();
    let mut phi = barrier_objective(problem, &x, mu, counters);
    if !phi.is_finite() {
        return Err(Error::NonFiniteEvaluation);
    }
    let mut grad_b_prev = cone.barrier_gradient(&x)?;
    let mut lambda2 = DVector::zeros(affine.m());
    let mut records = Vec::new();
    let mut iterates = Vec::new();
    if params.record_iterates {
        iterates.push(x.clone());
    }

    let mut k = 0usize;
    let (status, lambda_final, probability_bound) = loop {
        let factor = cone.barrier_factor(&x, counters)?;
        let ws = build_workspace(affine, factor, counters)?;
        let grad_f = objective_gradient(problem, &x, counters)?;
        let grad_b = cone.barrier_gradient(&x)?;
        let gphi = &grad_f + &grad_b * mu;
        let lambda1 = multiplier_first(&ws, &gphi);
        let gate = fosp_gate(
            problem,
            &ws,
            &grad_f,
            &grad_b,
            &grad_b_prev,
            &lambda1,
            &lambda2,
            mu,
            params.beta,
        );
        let lambda_gate = match gate.which {
            MultiplierChoice::Lambda1 => &lambda1,
            MultiplierChoice::Lambda2 => &lambda2,
        };

        let mut record = IterationRecord {
            k,
            phi_mu: phi,
            fosp_residual_min: gate.residual,
            branch: Branch::Terminate,
            step_alpha: 0.0,
            dir_norm: 0.0,
            cg_iters: 0,
            lanczos_iters: 0,
        };

        let hess = LocalHessian::new(objective, &x);
        let g = ws.apply_pt(&gphi);
        let (branch, d, outcome) = if !gate.triggered {
            if k >= params.max_outer_iters {
                records.push(record);
                break (SolveStatus::MaxItersExceeded, lambda_gate.clone(), None);
            }
            let h_phi =
                |v: &DVector<f64>| ws.apply_preconditioned_hessian(|w| hess.apply(w), mu, v);
            let cg = capped_cg(h_phi, &g, &cg_params)?;
            record.cg_iters = cg.iterations;
            match cg.d_type {
                DirectionType::Sol => {
                    let d = scale_sol_direction(&ws, &cg.direction, params.beta)?;
                    let ls = line_search_sol(
                        problem,
                        &ws,
                        mu,
                        &d,
                        phi,
                        params.epsilon,
                        params.eta,
                        params.theta,
                        params.max_backtracks,
                    );
                    (Branch::CgSol, d, ls)
                }
                DirectionType::Nc => {
                    let curvature =
                        nc_curvature(h_phi, &cg.direction)? * cg.direction.norm_squared();
                    let d = scale_nc_direction(&ws, &cg.direction, curvature, &g, params.beta)?;
                    let ls = line_search_nc(
                        problem,
                        &ws,
                        mu,
                        &d,
                        phi,
                        params.eta,
                        params.theta,
                        params.max_backtracks,
                    );
                    (Branch::CgNc, d, ls)
                }
            }
        } else {
            if params.fosp_only {
                records.push(record);
                break (SolveStatus::FospCertified, lambda_gate.clone(), None);
            }
            let h_f = |v: &DVector<f64>| ws.apply_preconditioned_hessian(|w| hess.apply(w), 0.0, v);
            let meo = min_eig_oracle(h_f, n, sqrt_eps, params.delta, params.seed.derive(k as u64))?;
            record.lanczos_iters = meo.lanczos_iterations;
            match meo.kind {
                MeoKind::Certified {
                    probability_bound, ..
                } => {
                    records.push(record);
                    break (
                        SolveStatus::SospCertified,
                        lambda_gate.clone(),
                        Some(probability_bound),
                    );
                }
                MeoKind::NegativeCurvature { v, curvature } => {
                    if k >= params.max_outer_iters {
                        records.push(record);
                        break (SolveStatus::MaxItersExceeded, lambda_gate.clone(), None);
                    }
                    // PᵀμHB P = μQ
                    let curvature_phi = curvature + mu * ws.apply_q(&v).norm_squared();
                    let d = scale_meo_direction(&ws, &v, curvature_phi, &g, params.beta);
                    let ls = line_search_nc(
                        problem,
                        &ws,
                        mu,
                        &d,
                        phi,
                        params.eta,
                        params.theta,
                        params.max_backtracks,
                    );
                    (Branch::MeoNc, d, ls)
                }
            }
        };

        record.branch = branch;
        record.dir_norm = d.norm();
        let ls = match outcome {
            Ok(ls) => ls,
            Err(Error::LineSearchFailure(_)) => {
                records.push(record);
                break (SolveStatus::LineSearchFailure, lambda_gate.clone(), None);
            }
            Err(e) => return Err(e),
        };
        record.step_alpha = ls.alpha;
        records.push(record);

        if branch == Branch::CgSol && ls.alpha == 1.0 {
            lambda2 = multiplier_second(&ws, |w| hess.apply(w), &d, &gphi);
        }
        grad_b_prev = grad_b;

        let mut x_new = ls.x_new;
        phi = ls.phi_new;
        if affine.residual_inf(&x_new) > feas / 10.0 {
            x_new = affine.project(&x_new);
            if !cone.interior_membership(&x_new, INTERNAL_MARGIN) {
                return Err(Error::InfeasibleStart(
                    "re-projection onto the affine constraints left the cone".into(),
                ));
            }
            phi = barrier_objective(problem, &x_new, mu, counters);
        }
        x = x_new;
        if params.record_iterates {
            iterates.push(x.clone());
        }
        k += 1;
    };

    let counters_used = counters.snapshot().since(&start);
    Ok(SolveResult {
        x_final: x,
        lambda_final,
        status,
        probability_bound,
        iterations: k,
        mu,
        trace: SolveTrace {
            records,
            counters: counters_used,
            certificate: None,
        },
        iterates,
    })
}
