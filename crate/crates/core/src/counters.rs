//! Operation accounting.
//!
//! Categories follow the main-operation taxonomy of the method: Cholesky
//! factorizations of the barrier Hessian, Hessian-vector products of the
//! objective, triangular solves against a Cholesky factor, products of the
//! constraint matrix with its transpose (one per Schur complement assembly),
//! gradient evaluations and function evaluations.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

/// Thread-safe operation counters. Share by reference between concurrent
/// solves if a global tally is wanted, or give each solve its own.
#[derive(Debug, Default)]
pub struct OpCounters {
    cholesky: AtomicU64,
    hess_vec: AtomicU64,
    tri_solve: AtomicU64,
    mat_t_mat: AtomicU64,
    grad_eval: AtomicU64,
    fun_eval: AtomicU64,
}

/// Plain snapshot of [`OpCounters`].
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterSnapshot {
    pub cholesky: u64,
    pub hess_vec: u64,
    pub tri_solve: u64,
    pub mat_t_mat: u64,
    pub grad_eval: u64,
    pub fun_eval: u64,
}

macro_rules! bump {
    ($name:ident, $field:ident) => {
        #[inline]
        pub fn $name(&self, k: u64) {
            self.$field.fetch_add(k, Ordering::Relaxed);
        }
    };
}

impl OpCounters {
    pub fn new() -> Self {
        Self::default()
    }

    bump!(add_cholesky, cholesky);
    bump!(add_hess_vec, hess_vec);
    bump!(add_tri_solve, tri_solve);
    bump!(add_mat_t_mat, mat_t_mat);
    bump!(add_grad_eval, grad_eval);
    bump!(add_fun_eval, fun_eval);

    pub fn snapshot(&self) -> CounterSnapshot {
        CounterSnapshot {
            cholesky: self.cholesky.load(Ordering::Relaxed),
            hess_vec: self.hess_vec.load(Ordering::Relaxed),
            tri_solve: self.tri_solve.load(Ordering::Relaxed),
            mat_t_mat: self.mat_t_mat.load(Ordering::Relaxed),
            grad_eval: self.grad_eval.load(Ordering::Relaxed),
            fun_eval: self.fun_eval.load(Ordering::Relaxed),
        }
    }
}

impl CounterSnapshot {
    /// Componentwise difference `self - earlier`.
    pub fn since(&self, earlier: &CounterSnapshot) -> CounterSnapshot {
        CounterSnapshot {
            cholesky: self.cholesky - earlier.cholesky,
            hess_vec: self.hess_vec - earlier.hess_vec,
            tri_solve: self.tri_solve - earlier.tri_solve,
            mat_t_mat: self.mat_t_mat - earlier.mat_t_mat,
            grad_eval: self.grad_eval - earlier.grad_eval,
            fun_eval: self.fun_eval - earlier.fun_eval,
        }
    }
}
