//! Shared fixtures and dense reference computations for integration tests.
#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use conic_sosp::{Cone, ConeBlock};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normal_vec(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| normal(rng))
}

pub fn normal_mat(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| normal(rng))
}

/// Random strictly interior point, blockwise.
pub fn random_interior(cone: &Cone, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let mut x = Vec::with_capacity(cone.dim());
    for block in cone.blocks() {
        match *block {
            ConeBlock::Orthant { dim } => {
                for _ in 0..dim {
                    x.push(rng.random_range(0.05..3.0));
                }
            }
            ConeBlock::Soc { dim } => {
                let u: Vec<f64> = (0..dim - 1).map(|_| normal(rng)).collect();
                let nu = u.iter().map(|v| v * v).sum::<f64>().sqrt();
                x.push(nu + rng.random_range(0.05..2.0));
                x.extend(u);
            }
        }
    }
    DVector::from_vec(x)
}

/// Random unit vector.
pub fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let v = normal_vec(n, rng);
    let nv = v.norm();
    v / nv
}

/// Random orthogonal matrix from a QR factorization.
pub fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    normal_mat(n, n, rng).qr().q()
}

/// `U diag(eigs) Uᵀ` with a random orthogonal `U`.
pub fn with_spectrum(eigs: &[f64], rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = eigs.len();
    let u = random_orthogonal(n, rng);
    let h = &u * DMatrix::from_diagonal(&DVector::from_column_slice(eigs)) * u.transpose();
    (&h + h.transpose()) * 0.5
}

pub fn min_eig(h: &DMatrix<f64>) -> f64 {
    h.clone().symmetric_eigenvalues().min()
}

/// Dense `Q`, `P`, `R` assembled from the analytic barrier Hessian with
/// nalgebra's Cholesky and explicit inverses.
pub struct DenseOps {
    pub m_mat: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

pub fn dense_ops(cone: &Cone, a: &DMatrix<f64>, x: &DVector<f64>) -> DenseOps {
    let n = x.len();
    let hb = cone.barrier_hessian(x).unwrap();
    let l = hb
        .cholesky()
        .expect("barrier Hessian is positive definite")
        .l();
    let m_mat = l.transpose().try_inverse().unwrap();
    if a.nrows() == 0 {
        return DenseOps {
            p: m_mat.clone(),
            m_mat,
            q: DMatrix::identity(n, n),
            r: DMatrix::zeros(0, n),
        };
    }
    let amm = a * &m_mat * m_mat.transpose();
    let s_inv = (&amm * a.transpose()).try_inverse().unwrap();
    let q = DMatrix::identity(n, n) - m_mat.transpose() * a.transpose() * &s_inv * a * &m_mat;
    let p = &m_mat * &q;
    let r = -(&s_inv * amm);
    DenseOps { m_mat, q, p, r }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// A seeded capped-CG instance: `(H, g, ε)` with `n ≤ 40` and a spectrum
/// drawn from one of several regimes (definite, indefinite, nearly
/// singular, badly scaled).
pub fn cg_case(seed: u64) -> (DMatrix<f64>, DVector<f64>, f64) {
    let (h, g, eps, _) = cg_case_kind(seed);
    (h, g, eps)
}

/// As [`cg_case`], also returning the spectrum regime `0..4`; regime 3 is
/// log-uniform over five decades.
pub fn cg_case_kind(seed: u64) -> (DMatrix<f64>, DVector<f64>, f64, usize) {
    let mut r = rng(seed);
    let n = r.random_range(2..=40usize);
    let eps = [0.5, 0.1, 1e-2, 1e-3][r.random_range(0..4usize)];
    let kind = r.random_range(0..4usize);
    let eigs: Vec<f64> = (0..n)
        .map(|_| match kind {
            0 => r.random_range(0.0..2.0),
            1 => r.random_range(-1.0..1.0),
            2 => r.random_range(-1.0..1.0) * eps,
            _ => {
                10f64.powf(r.random_range(-3.0..2.0)) * if r.random_bool(0.2) { -1.0 } else { 1.0 }
            }
        })
        .collect();
    let h = with_spectrum(&eigs, &mut r);
    let g = normal_vec(n, &mut r);
    (h, g, eps, kind)
}

/// Checks the capped CG output contract; returns a description of the
/// first violation. The `n` part of the iteration bound relies on exact
/// conjugacy and is only checked when `enforce_n` is set.
pub fn check_cg_contract(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    eps: f64,
    res: &conic_sosp::CappedCgResult,
    enforce_n: bool,
) -> Result<(), String> {
    let d = &res.direction;
    let dd = d.norm_squared();
    let curv = d.dot(&(h * d));
    let n = g.len();
    let j_bound = res.monitor.iteration_bound();
    let bound = if enforce_n { n.min(j_bound) } else { j_bound };
    if res.iterations > bound {
        return Err(format!(
            "iterations {} exceed the bound {bound} (n = {n}, J = {j_bound})",
            res.iterations
        ));
    }
    match res.d_type {
        conic_sosp::DirectionType::Sol => {
            let resid = (h * d + d * (2.0 * eps) + g).norm();
            let target = res.monitor.zeta_hat * g.norm();
            if resid > target * (1.0 + 1e-8) {
                return Err(format!("SOL residual {resid:e} above {target:e}"));
            }
            let hn = h.norm();
            if curv + eps * dd < -1e-8 * (hn + eps) * dd {
                return Err(format!("SOL curvature {:e} below -ε", curv / dd));
            }
        }
        conic_sosp::DirectionType::Nc => {
            if !(curv < -eps * dd) {
                return Err(format!(
                    "NC curvature {:e} not below -ε = {:e}",
                    curv / dd,
                    -eps
                ));
            }
        }
    }
    Ok(())
}

/// Seeded oracle instance with `‖H‖ ≤ 1` and `n ≤ 60`. With `negative`,
/// `λ_min(H) ≤ -2ε`; otherwise `H ⪰ 0`.
pub fn meo_case(seed: u64, negative: bool) -> (DMatrix<f64>, f64) {
    let mut r = rng(seed);
    let n = r.random_range(5..=60usize);
    let eps = [0.1, 0.05, 0.01][r.random_range(0..3usize)];
    let mut eigs: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
    if negative {
        let lmin = r.random_range(-1.0..-2.0 * eps);
        eigs[0] = lmin;
        for e in eigs.iter_mut().skip(1) {
            *e = r.random_range(lmin..1.0);
        }
    }
    (with_spectrum(&eigs, &mut r), eps)
}

/// Run invariants of a solve recorded with `record_iterates`: feasibility
/// and interiority of every iterate, strict descent of the recorded barrier
/// objective, the local step cap, and the factorization count.
pub fn check_run_invariants(
    problem: &conic_sosp::ConicProblem,
    params: &conic_sosp::SolverParams,
    res: &conic_sosp::SolveResult,
) -> Result<(), String> {
    let cone = problem.cone();
    let affine = problem.affine();
    let feas = affine.scaled_tol(params.feas_tol);
    if res.iterates.len() != res.iterations + 1 {
        return Err(format!(
            "{} iterates for {} steps",
            res.iterates.len(),
            res.iterations
        ));
    }
    for (k, x) in res.iterates.iter().enumerate() {
        if !cone.interior_membership(x, 0.0) {
            return Err(format!("iterate {k} not interior"));
        }
        let r = affine.residual_inf(x);
        if r > feas {
            return Err(format!("iterate {k} residual {r:e} above {feas:e}"));
        }
    }
    for w in res.iterates.windows(2) {
        let f = cone
            .barrier_factor(&w[0], &conic_sosp::OpCounters::new())
            .unwrap();
        let step = f.local_norm_primal(&(&w[1] - &w[0]));
        if step > params.beta * (1.0 + 1e-10) {
            return Err(format!("local step {step} above beta {}", params.beta));
        }
    }
    for w in res.trace.records.windows(2) {
        if !(w[1].phi_mu < w[0].phi_mu) {
            return Err(format!("phi not decreasing at record {}", w[1].k));
        }
    }
    if res.trace.counters.cholesky != res.iterations as u64 + 1 {
        return Err(format!(
            "{} factorizations for {} iterations",
            res.trace.counters.cholesky, res.iterations
        ));
    }
    Ok(())
}

/// Random strictly feasible point near the problem's shipped `x0`.
pub fn random_feasible(problem: &conic_sosp::ConicProblem, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let x0 = problem.x0().expect("instance ships x0").clone();
    let z = normal_vec(x0.len(), rng);
    let mut scale = x0.norm() / z.norm();
    loop {
        let x = problem.affine().project(&(&x0 + &z * scale));
        if problem.cone().interior_membership(&x, 1e-3) {
            return x;
        }
        scale *= 0.5;
    }
}
