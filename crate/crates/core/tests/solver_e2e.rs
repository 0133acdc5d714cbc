mod common;

use std::sync::Arc;
use std::thread;

use common::*;
use conic_sosp::problems::{BuiltinParams, Quadratic};
use conic_sosp::{
    builtin, check_fosp, check_sosp_dense, solve, solve_with_counters, AffineData, Branch, Cone,
    ConicProblem, OpCounters, RngSeed, SolveStatus, SolverParams, Tolerances,
};
use nalgebra::{DMatrix, DVector};

fn params(eps: f64, seed: u64) -> SolverParams {
    let mut p = SolverParams::new(eps);
    p.seed = RngSeed(seed);
    p.record_iterates = true;
    p
}

fn instance(name: &str, n: usize, m: Option<usize>) -> ConicProblem {
    builtin(
        name,
        &BuiltinParams {
            n,
            m,
            ..Default::default()
        },
    )
    .unwrap()
}

fn certified_run(problem: &ConicProblem, eps: f64) -> conic_sosp::SolveResult {
    let p = params(eps, 7);
    let res = solve(problem, problem.x0().unwrap(), &p).unwrap();
    assert_eq!(res.status, SolveStatus::SospCertified, "{}", problem.name());
    check_run_invariants(problem, &p, &res).unwrap();
    let rep = check_sosp_dense(
        problem,
        &res.x_final,
        &res.lambda_final,
        eps,
        eps.sqrt() + 1e-6,
        &Tolerances::default(),
    )
    .unwrap();
    assert!(rep.fosp_ok, "{rep:?}");
    assert!(rep.fosp_residual <= eps);
    assert_eq!(rep.sosp_ok, Some(true), "{rep:?}");
    res
}

#[test]
fn negnorm_reaches_vertex() {
    let p = instance("negnorm_simplex", 10, None);
    let res = certified_run(&p, 1e-3);
    assert!(p.objective().value(&res.x_final) <= -0.45);
    assert!(res.probability_bound.unwrap() > 0.0);
}

#[test]
fn pnorm_reaches_vertex() {
    let p = instance("pnorm_simplex", 10, None);
    let res = certified_run(&p, 1e-3);
    assert!(p.objective().value(&res.x_final) <= 1.1);
}

#[test]
fn soc_instance_certifies() {
    let p = instance("soc_quadratic", 10, Some(2));
    certified_run(&p, 1e-3);
}

#[test]
fn unconstrained_loss_certifies() {
    let p = instance("regularized_loss", 8, None);
    let res = certified_run(&p, 1e-2);
    assert_eq!(res.lambda_final.len(), 0);
}

#[test]
fn nonconvex_qp_certifies() {
    let p = instance("nonconvex_qp_simplex", 12, None);
    certified_run(&p, 1e-3);
}

#[test]
fn linear_objective_multiplier() {
    // min cᵀx over the simplex: the optimal multiplier is -min c
    let n = 4;
    let c = DVector::from_column_slice(&[3.0, 1.0, 2.0, 5.0]);
    let p = ConicProblem::new(
        "lp",
        Cone::orthant(n),
        AffineData::new(
            DMatrix::from_element(1, n, 1.0),
            DVector::from_element(1, 1.0),
        )
        .unwrap(),
        Arc::new(Quadratic::new(DMatrix::zeros(n, n), c.clone())),
        None,
    )
    .unwrap();
    let eps = 1e-3;
    let x0 = DVector::from_element(n, 0.25);
    let res = solve(&p, &x0, &params(eps, 1)).unwrap();
    assert_eq!(res.status, SolveStatus::SospCertified);
    assert!((res.lambda_final[0] + 1.0).abs() <= eps);
    let s = &c + DVector::from_element(n, res.lambda_final[0]);
    assert!(p.cone().dual_membership(&s, 0.0));
    assert!(res.x_final[1] > 1.0 - eps);
}

#[test]
fn simplex_center_is_already_second_order_stationary() {
    // at e/10 the preconditioned reduced Hessian of -½‖x‖² is -0.01 Q,
    // which passes the √ε test for ε = 1e-3
    let p = instance("negnorm_simplex", 10, None);
    let x0 = DVector::from_element(10, 0.1);
    let res = solve(&p, &x0, &params(1e-3, 7)).unwrap();
    assert_eq!(res.status, SolveStatus::SospCertified);
    assert_eq!(res.iterations, 0);
    let rep = check_sosp_dense(
        &p,
        &res.x_final,
        &res.lambda_final,
        1e-3,
        1e-3f64.sqrt(),
        &Tolerances::default(),
    )
    .unwrap();
    assert_eq!(rep.sosp_ok, Some(true));
    assert!((rep.sosp_min_eig.unwrap() + 0.01).abs() < 1e-10);
    // a tighter tolerance sees the negative curvature and moves away
    let res = solve(&p, &x0, &params(1e-5, 7)).unwrap();
    assert!(res.iterations > 0);
    assert_eq!(res.trace.records[0].branch, Branch::MeoNc);
}

#[test]
fn fosp_only_mode_stops_at_gate() {
    let p = instance("negnorm_simplex", 10, None);
    let mut prm = params(1e-2, 7);
    prm.fosp_only = true;
    let res = solve(&p, p.x0().unwrap(), &prm).unwrap();
    assert_eq!(res.status, SolveStatus::FospCertified);
    assert_eq!(res.probability_bound, None);
    // capped CG spends cg_iters + 1 products per step, NC steps one more
    // for the curvature and unit SOL steps one more for the multiplier
    let steps = &res.trace.records[..res.iterations];
    let expected: u64 = steps
        .iter()
        .map(|r| {
            r.cg_iters as u64
                + 1
                + (r.branch == Branch::CgNc) as u64
                + (r.branch == Branch::CgSol && r.step_alpha == 1.0) as u64
        })
        .sum();
    assert_eq!(res.trace.counters.hess_vec, expected);
    let rep = check_fosp(
        &p,
        &res.x_final,
        &res.lambda_final,
        1e-2,
        &Tolerances::default(),
    )
    .unwrap();
    assert!(rep.fosp_ok);
}

#[test]
fn iteration_limit_reported() {
    let p = instance("negnorm_simplex", 10, None);
    let mut prm = params(1e-3, 7);
    prm.max_outer_iters = 5;
    let res = solve(&p, p.x0().unwrap(), &prm).unwrap();
    assert_eq!(res.status, SolveStatus::MaxItersExceeded);
    assert_eq!(res.iterations, 5);
    assert_eq!(res.trace.records.len(), 6);
    assert_eq!(res.trace.counters.cholesky, 6);
}

#[test]
fn identical_inputs_identical_traces() {
    let p = instance("nonconvex_qp_simplex", 10, None);
    let a = solve(&p, p.x0().unwrap(), &params(1e-2, 3)).unwrap();
    let b = solve(&p, p.x0().unwrap(), &params(1e-2, 3)).unwrap();
    assert_eq!(a.trace.to_csv(), b.trace.to_csv());
    assert_eq!(a.trace.to_json(), b.trace.to_json());
    assert_eq!(a.x_final, b.x_final);
}

#[test]
fn concurrent_solves_share_counters() {
    let shared = Arc::new(OpCounters::new());
    let handles: Vec<_> = (0..4)
        .map(|i| {
            let shared = Arc::clone(&shared);
            thread::spawn(move || {
                let p = instance("negnorm_simplex", 6 + i, None);
                let res =
                    solve_with_counters(&p, p.x0().unwrap(), &params(1e-2, i as u64), &shared)
                        .unwrap();
                res.iterations as u64 + 1
            })
        })
        .collect();
    let total: u64 = handles.into_iter().map(|h| h.join().unwrap()).sum();
    assert_eq!(shared.snapshot().cholesky, total);
}
