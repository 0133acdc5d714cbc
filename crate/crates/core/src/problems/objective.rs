use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

/// Twice differentiable objective. Implementors provide either a dense
/// Hessian or a Hessian-vector product (the default of each is written in
/// terms of the other, so at least one must be overridden).
pub trait Objective: Debug + Send + Sync {
    fn value(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;

    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let _ = x;
        None
    }

    fn hess_vec(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.hessian(x)
            .expect("objective provides neither a Hessian nor a Hessian-vector product")
            * v
    }
}

/// `½ xᵀQx + cᵀx`; `Q` is symmetrized on construction.
#[derive(Debug, Clone)]
pub struct Quadratic {
    q: DMatrix<f64>,
    c: DVector<f64>,
}

impl Quadratic {
    pub fn new(q: DMatrix<f64>, c: DVector<f64>) -> Self {
        let q = (&q + q.transpose()) * 0.5;
        Self { q, c }
    }
}

impl Objective for Quadratic {
    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q * x)) + self.c.dot(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.q * x + &self.c
    }

    fn hessian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(self.q.clone())
    }

    fn hess_vec(&self, _x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        &self.q * v
    }
}

/// `-½‖x‖²`.
#[derive(Debug, Clone, Copy)]
pub struct NegHalfNormSq;

impl Objective for NegHalfNormSq {
    fn value(&self, x: &DVector<f64>) -> f64 {
        -0.5 * x.norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        -x
    }

    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(-DMatrix::identity(x.len(), x.len()))
    }

    fn hess_vec(&self, _x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        -v
    }
}

/// `Σ xᵢ^p`, defined for `x > 0`.
#[derive(Debug, Clone, Copy)]
pub struct PowerSum {
    pub p: f64,
}

impl Objective for PowerSum {
    fn value(&self, x: &DVector<f64>) -> f64 {
        x.iter().map(|v| v.powf(self.p)).sum()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        x.map(|v| self.p * v.powf(self.p - 1.0))
    }

    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_diagonal(&self.diag(x)))
    }

    fn hess_vec(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.diag(x).component_mul(v)
    }
}

impl PowerSum {
    fn diag(&self, x: &DVector<f64>) -> DVector<f64> {
        x.map(|v| self.p * (self.p - 1.0) * v.powf(self.p - 2.0))
    }
}

/// `‖Cx - d‖² + Σ xᵢ^p`.
#[derive(Debug, Clone)]
pub struct RegularizedLoss {
    c: DMatrix<f64>,
    d: DVector<f64>,
    reg: PowerSum,
}

impl RegularizedLoss {
    pub fn new(c: DMatrix<f64>, d: DVector<f64>, p: f64) -> Self {
        Self {
            c,
            d,
            reg: PowerSum { p },
        }
    }
}

impl Objective for RegularizedLoss {
    fn value(&self, x: &DVector<f64>) -> f64 {
        (&self.c * x - &self.d).norm_squared() + self.reg.value(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.c.transpose() * (&self.c * x - &self.d) * 2.0 + self.reg.gradient(x)
    }

    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let mut h = self.c.transpose() * &self.c * 2.0;
        for (i, v) in self.reg.diag(x).iter().enumerate() {
            h[(i, i)] += v;
        }
        Some(h)
    }

    fn hess_vec(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.c.transpose() * (&self.c * v) * 2.0 + self.reg.diag(x).component_mul(v)
    }
}

/// `f(x) + σ‖x‖²`.
#[derive(Debug, Clone)]
pub struct Perturbed {
    pub inner: Arc<dyn Objective>,
    pub sigma: f64,
}

impl Objective for Perturbed {
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.inner.value(x) + self.sigma * x.norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.inner.gradient(x) + x * (2.0 * self.sigma)
    }

    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.inner.hessian(x).map(|mut h| {
            for i in 0..h.nrows() {
                h[(i, i)] += 2.0 * self.sigma;
            }
            h
        })
    }

    fn hess_vec(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.inner.hess_vec(x, v) + v * (2.0 * self.sigma)
    }
}

/// `y ↦ f(W y)` for diagonal positive `W`.
#[derive(Debug, Clone)]
pub struct DiagonallyScaled {
    pub inner: Arc<dyn Objective>,
    pub w: DVector<f64>,
}

impl Objective for DiagonallyScaled {
    fn value(&self, y: &DVector<f64>) -> f64 {
        self.inner.value(&y.component_mul(&self.w))
    }

    fn gradient(&self, y: &DVector<f64>) -> DVector<f64> {
        self.inner
            .gradient(&y.component_mul(&self.w))
            .component_mul(&self.w)
    }

    fn hessian(&self, y: &DVector<f64>) -> Option<DMatrix<f64>> {
        let x = y.component_mul(&self.w);
        self.inner.hessian(&x).map(|h| {
            let wd = DMatrix::from_diagonal(&self.w);
            &wd * h * &wd
        })
    }

    fn hess_vec(&self, y: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let x = y.component_mul(&self.w);
        self.inner
            .hess_vec(&x, &v.component_mul(&self.w))
            .component_mul(&self.w)
    }
}
