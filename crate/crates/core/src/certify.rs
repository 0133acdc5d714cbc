//! Independent verification of approximate first- and second-order
//! stationarity at a candidate pair `(x, λ)`.
//!
//! A point is an `ε_g`-FOSP when `Ax = b`, `x ∈ int K`,
//! `∇f(x) + Aᵀλ ∈ K*` and `‖∇f(x) + Aᵀλ‖ₓ* ≤ ε_g`. It is additionally an
//! `(ε_g, ε_H)`-SOSP when `dᵀ∇²f(x)d ≥ -ε_H ‖d‖ₓ²` for all `d` with
//! `Ad = 0`. The second-order test is evaluated densely as the smallest
//! eigenvalue of the pencil `(Zᵀ∇²f Z, Zᵀ∇²B Z)` over an orthonormal null
//! space basis `Z`, which is independent of the Lanczos path the solver uses.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::cones::ConeBlock;
use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::linops::AffineData;
use crate::problems::{ConicProblem, DiagonallyScaled};

/// Largest dimension accepted by the dense second-order check.
pub const DENSE_LIMIT: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Feasibility tolerance, scaled by `1 + ‖b‖_∞`.
    pub feas_tol: f64,
    /// Absolute slack for dual cone membership.
    pub dual_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feas_tol: 1e-9,
            dual_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub feasibility_ok: bool,
    /// `‖Ax - b‖_∞`.
    pub primal_residual: f64,
    pub interior_ok: bool,
    pub dual_cone_ok: bool,
    /// `‖∇f(x) + Aᵀλ‖ₓ*`; infinite when `x` is not interior.
    #[serde(with = "extended_real")]
    pub fosp_residual: f64,
    pub fosp_ok: bool,
    /// Smallest eigenvalue of the reduced pencil, `+∞` when the null space
    /// of `A` is trivial, `None` if the second-order test was not run.
    #[serde(with = "extended_real_opt")]
    pub sosp_min_eig: Option<f64>,
    pub sosp_ok: Option<bool>,
}

fn check_dims(problem: &ConicProblem, x: &DVector<f64>, lambda: &DVector<f64>) -> Result<()> {
    if x.len() != problem.n() {
        return Err(Error::Dimension {
            what: "point",
            expected: problem.n(),
            got: x.len(),
        });
    }
    if lambda.len() != problem.affine().m() {
        return Err(Error::Dimension {
            what: "multiplier",
            expected: problem.affine().m(),
            got: lambda.len(),
        });
    }
    Ok(())
}

/// First-order conditions. Failures are reported, not raised; only
/// dimension mismatches are errors.
pub fn check_fosp(
    problem: &ConicProblem,
    x: &DVector<f64>,
    lambda: &DVector<f64>,
    eps_g: f64,
    tol: &Tolerances,
) -> Result<CertificateReport> {
    check_dims(problem, x, lambda)?;
    let affine = problem.affine();
    let primal_residual = affine.residual_inf(x);
    let feasibility_ok = primal_residual <= affine.scaled_tol(tol.feas_tol);
    let interior_ok = problem.cone().interior_membership(x, 0.0);

    let mut s = problem.objective().gradient(x);
    if affine.m() > 0 {
        s += affine.a().transpose() * lambda;
    }
    let dual_cone_ok = problem.cone().dual_membership(&s, tol.dual_tol);
    let fosp_residual = if interior_ok {
        match problem.cone().barrier_factor(x, &OpCounters::new()) {
            Ok(f) => f.local_norm_dual(&s),
            Err(_) => f64::INFINITY,
        }
    } else {
        f64::INFINITY
    };
    let fosp_ok = feasibility_ok && interior_ok && dual_cone_ok && fosp_residual <= eps_g;
    Ok(CertificateReport {
        feasibility_ok,
        primal_residual,
        interior_ok,
        dual_cone_ok,
        fosp_residual,
        fosp_ok,
        sosp_min_eig: None,
        sosp_ok: None,
    })
}

/// Orthonormal basis of the null space of `A` (columns).
pub fn null_space_basis(affine: &AffineData) -> DMatrix<f64> {
    let (m, n) = (affine.m(), affine.n());
    if m == 0 {
        return DMatrix::identity(n, n);
    }
    let a = affine.a();
    let gram_inv = (a * a.transpose())
        .try_inverse()
        .expect("A has full row rank");
    let proj = DMatrix::identity(n, n) - a.transpose() * gram_inv * a;
    let eig = SymmetricEigen::new((&proj + proj.transpose()) * 0.5);
    let cols: Vec<DVector<f64>> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &ev)| ev > 0.5)
        .map(|(i, _)| eig.eigenvectors.column(i).clone_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

fn dense_hessian(problem: &ConicProblem, x: &DVector<f64>) -> DMatrix<f64> {
    let f = problem.objective();
    let n = x.len();
    let h = f.hessian(x).unwrap_or_else(|| {
        let mut h = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = DVector::zeros(n);
            e[j] = 1.0;
            h.set_column(j, &f.hess_vec(x, &e));
        }
        h
    });
    (&h + h.transpose()) * 0.5
}

/// Smallest `dᵀ∇²f d / ‖d‖ₓ²` over `d ≠ 0` with `Ad = 0`.
pub fn reduced_min_eigenvalue(problem: &ConicProblem, x: &DVector<f64>) -> Result<f64> {
    let n = problem.n();
    if n > DENSE_LIMIT {
        return Err(Error::Size {
            n,
            limit: DENSE_LIMIT,
        });
    }
    let z = null_space_basis(problem.affine());
    if z.ncols() == 0 {
        return Ok(f64::INFINITY);
    }
    let factor = problem.cone().barrier_factor(x, &OpCounters::new())?;
    // G = ZᵀLLᵀZ = (LᵀZ)ᵀ(LᵀZ)
    let ltz = DMatrix::from_columns(
        &z.column_iter()
            .map(|c| factor.mul_lt(&c.clone_owned()))
            .collect::<Vec<_>>(),
    );
    let g = ltz.transpose() * &ltz;
    let k = g
        .cholesky()
        .ok_or(Error::Factorization { row: 0, pivot: 0.0 })?
        .l();
    let hz = z.transpose() * dense_hessian(problem, x) * &z;
    let k_inv = k
        .solve_lower_triangular(&DMatrix::identity(k.nrows(), k.nrows()))
        .ok_or(Error::Factorization { row: 0, pivot: 0.0 })?;
    let c = &k_inv * hz * k_inv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    Ok(c.symmetric_eigenvalues().min())
}

/// First- and second-order conditions with a dense reduced Hessian.
pub fn check_sosp_dense(
    problem: &ConicProblem,
    x: &DVector<f64>,
    lambda: &DVector<f64>,
    eps_g: f64,
    eps_h: f64,
    tol: &Tolerances,
) -> Result<CertificateReport> {
    let n = problem.n();
    if n > DENSE_LIMIT {
        return Err(Error::Size {
            n,
            limit: DENSE_LIMIT,
        });
    }
    let mut report = check_fosp(problem, x, lambda, eps_g, tol)?;
    if !report.interior_ok {
        report.sosp_ok = Some(false);
        return Ok(report);
    }
    let min_eig = reduced_min_eigenvalue(problem, x)?;
    report.sosp_min_eig = Some(min_eig);
    report.sosp_ok = Some(report.fosp_ok && min_eig >= -eps_h);
    Ok(report)
}

/// FOSP residual of the original problem at `x` and of the rescaled problem
/// `min f(Wy) s.t. AWy = b, y ∈ W⁻¹K` at `y = W⁻¹x`, with barrier `B(Wy)`.
///
/// `W` must map every cone block onto itself: any positive diagonal on
/// orthant blocks, a positive multiple of the identity on second-order
/// blocks. Under such `W`, `B(Wy)` differs from the cone's own barrier at
/// `y` by a constant, so the transformed residual is evaluated with the
/// ordinary factor at `y`.
pub fn scale_invariance_check(
    problem: &ConicProblem,
    x: &DVector<f64>,
    lambda: &DVector<f64>,
    w: &DVector<f64>,
) -> Result<(f64, f64)> {
    check_dims(problem, x, lambda)?;
    if w.len() != problem.n() {
        return Err(Error::Dimension {
            what: "scaling",
            expected: problem.n(),
            got: w.len(),
        });
    }
    let mut offset = 0;
    for (i, block) in problem.cone().blocks().iter().enumerate() {
        let wb = w.rows(offset, block.dim());
        if wb.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::ConeMismatch(i));
        }
        if let ConeBlock::Soc { .. } = block {
            let w0 = wb[0];
            if wb.iter().any(|&v| (v - w0).abs() > 1e-15 * w0) {
                return Err(Error::ConeMismatch(i));
            }
        }
        offset += block.dim();
    }

    let tol = Tolerances::default();
    let original = check_fosp(problem, x, lambda, f64::INFINITY, &tol)?.fosp_residual;

    let affine = problem.affine();
    let scaled_a = affine.a() * DMatrix::from_diagonal(w);
    let scaled_affine = AffineData::new(scaled_a, affine.b().clone())?;
    let scaled = ConicProblem::new(
        format!("{}-scaled", problem.name()),
        problem.cone().clone(),
        scaled_affine,
        Arc::new(DiagonallyScaled {
            inner: Arc::clone(problem.objective()),
            w: w.clone(),
        }),
        None,
    )?;
    let y = x.component_div(w);
    let transformed = check_fosp(&scaled, &y, lambda, f64::INFINITY, &tol)?.fosp_residual;
    Ok((original, transformed))
}

mod extended_real {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Tag(String),
    }

    pub fn to_repr(v: f64) -> serde_json::Value {
        if v.is_finite() {
            serde_json::json!(v)
        } else if v.is_nan() {
            serde_json::json!("nan")
        } else if v > 0.0 {
            serde_json::json!("inf")
        } else {
            serde_json::json!("-inf")
        }
    }

    pub fn from_str(s: &str) -> Option<f64> {
        match s {
            "inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            "nan" => Some(f64::NAN),
            _ => None,
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Tag(t) => {
                from_str(&t).ok_or_else(|| serde::de::Error::custom(format!("bad real `{t}`")))
            }
        }
    }
}

mod extended_real_opt {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.map(super::extended_real::to_repr).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        let v: Option<serde_json::Value> = Option::deserialize(d)?;
        match v {
            None | Some(serde_json::Value::Null) => Ok(None),
            Some(serde_json::Value::Number(n)) => Ok(n.as_f64()),
            Some(serde_json::Value::String(t)) => super::extended_real::from_str(&t)
                .map(Some)
                .ok_or_else(|| serde::de::Error::custom(format!("bad real `{t}`"))),
            Some(other) => Err(serde::de::Error::custom(format!("bad real `{other}`"))),
        }
    }
}
