//! Problem abstraction, built-in instances and the JSON problem format.

mod builtin;
mod file;
mod objective;

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::cones::Cone;
use crate::error::{Error, Result};
use crate::linops::AffineData;

pub use builtin::{builtin, BuiltinParams, BUILTIN_NAMES};
pub use file::{
    load_problem, parse_problem, save_problem, BuiltinSpec, ObjectiveSpec, ProblemFile,
};
pub use objective::{
    DiagonallyScaled, NegHalfNormSq, Objective, Perturbed, PowerSum, Quadratic, RegularizedLoss,
};

/// `min { f(x) : A x = b, x ∈ K }`.
#[derive(Clone)]
pub struct ConicProblem {
    name: String,
    cone: Cone,
    affine: AffineData,
    objective: Arc<dyn Objective>,
    x0: Option<DVector<f64>>,
    file: Option<ProblemFile>,
}

impl fmt::Debug for ConicProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConicProblem")
            .field("name", &self.name)
            .field("n", &self.n())
            .field("m", &self.affine.m())
            .field("cone", &self.cone)
            .finish_non_exhaustive()
    }
}

impl ConicProblem {
    pub fn new(
        name: impl Into<String>,
        cone: Cone,
        affine: AffineData,
        objective: Arc<dyn Objective>,
        x0: Option<DVector<f64>>,
    ) -> Result<Self> {
        if cone.dim() != affine.n() {
            return Err(Error::Dimension {
                what: "constraint matrix columns",
                expected: cone.dim(),
                got: affine.n(),
            });
        }
        if let Some(x) = &x0 {
            if x.len() != cone.dim() {
                return Err(Error::Dimension {
                    what: "x0",
                    expected: cone.dim(),
                    got: x.len(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            cone,
            affine,
            objective,
            x0,
            file: None,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.cone.dim()
    }

    pub fn cone(&self) -> &Cone {
        &self.cone
    }

    pub fn affine(&self) -> &AffineData {
        &self.affine
    }

    pub fn objective(&self) -> &Arc<dyn Objective> {
        &self.objective
    }

    /// Shipped strictly feasible starting point, if any.
    pub fn x0(&self) -> Option<&DVector<f64>> {
        self.x0.as_ref()
    }

    /// The serializable description this problem was built from.
    pub fn file(&self) -> Option<&ProblemFile> {
        self.file.as_ref()
    }

    pub fn with_x0(mut self, x0: DVector<f64>) -> Result<Self> {
        if x0.len() != self.n() {
            return Err(Error::Dimension {
                what: "x0",
                expected: self.n(),
                got: x0.len(),
            });
        }
        if let Some(f) = &mut self.file {
            f.x0 = Some(x0.iter().copied().collect());
        }
        self.x0 = Some(x0);
        Ok(self)
    }

    pub(crate) fn with_file(mut self, file: ProblemFile) -> Self {
        self.file = Some(file);
        self
    }
}

/// `min { f(x) + σ‖x‖² : A x = b, x ∈ K }`.
pub fn perturb(problem: &ConicProblem, sigma: f64) -> Result<ConicProblem> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Param(format!(
            "perturbation sigma {sigma} must be positive"
        )));
    }
    let mut out = problem.clone();
    out.objective = Arc::new(Perturbed {
        inner: Arc::clone(&problem.objective),
        sigma,
    });
    out.name = format!("{}+sigma", problem.name);
    if let Some(f) = &mut out.file {
        f.sigma = Some(f.sigma.unwrap_or(0.0) + sigma);
    }
    Ok(out)
}

/// Largest relative deviations found by [`finite_diff_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteDiffReport {
    pub max_grad_err: f64,
    pub max_hess_err: f64,
}

/// Compares the gradient with central differences of the value and the
/// Hessian with central differences of the gradient. Errors are
/// `|fd - analytic| / (1 + |analytic|)`, maximized over entries.
pub fn finite_diff_check(problem: &ConicProblem, x: &DVector<f64>, h: f64) -> FiniteDiffReport {
    let f = problem.objective();
    let n = x.len();
    let g = f.gradient(x);
    let hess = f.hessian(x).unwrap_or_else(|| {
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = DVector::zeros(n);
            e[j] = 1.0;
            m.set_column(j, &f.hess_vec(x, &e));
        }
        m
    });
    let mut max_grad_err: f64 = 0.0;
    let mut max_hess_err: f64 = 0.0;
    for j in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        let fd = (f.value(&xp) - f.value(&xm)) / (2.0 * h);
        max_grad_err = max_grad_err.max((fd - g[j]).abs() / (1.0 + g[j].abs()));
        let col = (f.gradient(&xp) - f.gradient(&xm)) / (2.0 * h);
        for i in 0..n {
            let a = hess[(i, j)];
            max_hess_err = max_hess_err.max((col[i] - a).abs() / (1.0 + a.abs()));
        }
    }
    FiniteDiffReport {
        max_grad_err,
        max_hess_err,
    }
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}
