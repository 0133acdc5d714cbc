//! Projection-operator calculus around the barrier factor.
//!
//! With `∇²B(x) = L Lᵀ` and `M = L⁻ᵀ`, define `N = MᵀAᵀ = L⁻¹Aᵀ` and the
//! Schur complement `S = NᵀN = A M Mᵀ Aᵀ = C Cᵀ`. Then
//!
//! * `Q = I - N S⁻¹ Nᵀ` (orthogonal projector onto the null space of `AM`),
//! * `P = M Q`, so `A P v = 0`,
//! * `R = -S⁻¹ A M Mᵀ = -S⁻¹ Nᵀ Mᵀ`.
//!
//! Every application of `M`, `Mᵀ`, `C⁻¹` or `C⁻ᵀ` counts as one triangular
//! solve. Building a workspace costs `m` triangular solves (the columns of
//! `N`) plus one `m×n` times transpose product, and the Schur factorization
//! is attributed to that product rather than to the Cholesky counter, which
//! tracks barrier Hessian factorizations only.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cones::BarrierFactor;
use crate::counters::OpCounters;
use crate::dense::{backward_subst_transpose, cholesky_lower, forward_subst};
use crate::error::{Error, Result};

/// Equality constraints `A x = b` with `A` of full row rank.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "AffineRepr", into = "AffineRepr")]
pub struct AffineData {
    a: DMatrix<f64>,
    b: DVector<f64>,
    // Cholesky factor of A Aᵀ, used for re-projection onto {Ax = b}.
    gram_factor: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct AffineRepr {
    n: usize,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

impl TryFrom<AffineRepr> for AffineData {
    type Error = Error;

    fn try_from(r: AffineRepr) -> Result<Self> {
        let m = r.a.len();
        let mut a = DMatrix::zeros(m, r.n);
        for (i, row) in r.a.iter().enumerate() {
            if row.len() != r.n {
                return Err(Error::Schema(format!(
                    "row {i} of A has length {}, expected {}",
                    row.len(),
                    r.n
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                a[(i, j)] = v;
            }
        }
        AffineData::new(a, DVector::from_vec(r.b))
    }
}

impl From<AffineData> for AffineRepr {
    fn from(d: AffineData) -> Self {
        AffineRepr {
            n: d.n(),
            a: d.a
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            b: d.b.iter().copied().collect(),
        }
    }
}

impl AffineData {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let (m, n) = a.shape();
        if b.len() != m {
            return Err(Error::Dimension {
                what: "right-hand side b",
                expected: m,
                got: b.len(),
            });
        }
        if m > n {
            return Err(Error::Schema(format!(
                "A has more rows ({m}) than columns ({n})"
            )));
        }
        let gram = &a * a.transpose();
        let gram_factor = cholesky_lower(&gram)
            .map_err(|_| Error::Schema("constraint matrix A is not of full row rank".into()))?;
        let dmax = gram_factor.diagonal().amax();
        let dmin = gram_factor.diagonal().min();
        if m > 0 && dmin <= 1e-7 * dmax {
            return Err(Error::Schema(
                "constraint matrix A is numerically rank deficient".into(),
            ));
        }
        Ok(Self { a, b, gram_factor })
    }

    /// No equality constraints in dimension `n`.
    pub fn unconstrained(n: usize) -> Self {
        Self::new(DMatrix::zeros(0, n), DVector::zeros(0)).expect("empty constraints are valid")
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    /// `‖A x - b‖_∞`.
    pub fn residual_inf(&self, x: &DVector<f64>) -> f64 {
        if self.m() == 0 {
            return 0.0;
        }
        (&self.a * x - &self.b).amax()
    }

    /// Feasibility tolerance scaled by `1 + ‖b‖_∞`.
    pub fn scaled_tol(&self, tol: f64) -> f64 {
        tol * (1.0 + if self.m() == 0 { 0.0 } else { self.b.amax() })
    }

    /// Euclidean projection onto `{x : A x = b}`.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.m() == 0 {
            return x.clone();
        }
        let mut y = &self.a * x - &self.b;
        forward_subst(&self.gram_factor, &mut y);
        backward_subst_transpose(&self.gram_factor, &mut y);
        x - self.a.transpose() * y
    }
}

/// Per-iterate factorizations: barrier factor, `N = L⁻¹Aᵀ` and the Cholesky
/// factor of `S = NᵀN`. Immutable after construction.
#[derive(Debug, Clone)]
pub struct IterationWorkspace {
    factor: BarrierFactor,
    n_mat: DMatrix<f64>,
    schur_factor: DMatrix<f64>,
    counters: Arc<OpCounters>,
}

/// Builds the workspace at the factor's point.
pub fn build_workspace(
    affine: &AffineData,
    factor: BarrierFactor,
    counters: &Arc<OpCounters>,
) -> Result<IterationWorkspace> {
    let (m, n) = (affine.m(), affine.n());
    if factor.dim() != n {
        return Err(Error::Dimension {
            what: "barrier factor",
            expected: n,
            got: factor.dim(),
        });
    }
    let mut n_mat = DMatrix::zeros(n, m);
    for i in 0..m {
        let col = factor.solve_lower(&affine.a.row(i).transpose());
        n_mat.set_column(i, &col);
    }
    counters.add_tri_solve(m as u64);
    let schur_factor = if m == 0 {
        DMatrix::zeros(0, 0)
    } else {
        let s = n_mat.transpose() * &n_mat;
        counters.add_mat_t_mat(1);
        cholesky_lower(&s)?
    };
    Ok(IterationWorkspace {
        factor,
        n_mat,
        schur_factor,
        counters: Arc::clone(counters),
    })
}

impl IterationWorkspace {
    pub fn factor(&self) -> &BarrierFactor {
        &self.factor
    }

    pub fn point(&self) -> &DVector<f64> {
        self.factor.point()
    }

    pub fn n(&self) -> usize {
        self.n_mat.nrows()
    }

    pub fn m(&self) -> usize {
        self.n_mat.ncols()
    }

    /// `N = L⁻¹Aᵀ`.
    pub fn n_matrix(&self) -> &DMatrix<f64> {
        &self.n_mat
    }

    /// Cholesky factor `C` of the Schur complement.
    pub fn schur_factor(&self) -> &DMatrix<f64> {
        &self.schur_factor
    }

    pub fn counters(&self) -> &Arc<OpCounters> {
        &self.counters
    }

    /// `S⁻¹ w` through two triangular solves with `C`.
    fn schur_solve(&self, w: DVector<f64>) -> DVector<f64> {
        let mut y = w;
        forward_subst(&self.schur_factor, &mut y);
        backward_subst_transpose(&self.schur_factor, &mut y);
        self.counters.add_tri_solve(2);
        y
    }

    /// `M v = L⁻ᵀ v`, or `Mᵀ v = L⁻¹ v` when `transpose` is set.
    pub fn apply_m(&self, v: &DVector<f64>, transpose: bool) -> DVector<f64> {
        self.counters.add_tri_solve(1);
        if transpose {
            self.factor.solve_lower(v)
        } else {
            self.factor.solve_lower_transpose(v)
        }
    }

    pub fn apply_q(&self, v: &DVector<f64>) -> DVector<f64> {
        if self.m() == 0 {
            return v.clone();
        }
        let w = self.schur_solve(self.n_mat.transpose() * v);
        v - &self.n_mat * w
    }

    pub fn apply_p(&self, v: &DVector<f64>) -> DVector<f64> {
        self.apply_m(&self.apply_q(v), false)
    }

    pub fn apply_pt(&self, v: &DVector<f64>) -> DVector<f64> {
        self.apply_q(&self.apply_m(v, true))
    }

    /// `R v = -S⁻¹ A M Mᵀ v`, a vector of length `m`.
    pub fn apply_r(&self, v: &DVector<f64>) -> DVector<f64> {
        if self.m() == 0 {
            return DVector::zeros(0);
        }
        let mtv = self.apply_m(v, true);
        -self.schur_solve(self.n_mat.transpose() * mtv)
    }

    /// `Pᵀ ∇²f P v + μ Q v = Q Mᵀ ∇²f M Q v + μ Q v`, using `MᵀLLᵀM = I`.
    /// `hess_vec` evaluates `w ↦ ∇²f(x) w` at the workspace point.
    pub fn apply_preconditioned_hessian<F>(
        &self,
        hess_vec: F,
        mu: f64,
        v: &DVector<f64>,
    ) -> DVector<f64>
    where
        F: Fn(&DVector<f64>) -> DVector<f64>,
    {
        let v1 = self.apply_q(v);
        let v2 = self.apply_m(&v1, false);
        let v3 = hess_vec(&v2);
        self.counters.add_hess_vec(1);
        let v4 = self.apply_m(&v3, true);
        let mut v5 = self.apply_q(&v4);
        if mu != 0.0 {
            v5.axpy(mu, &v1, 1.0);
        }
        v5
    }
}
