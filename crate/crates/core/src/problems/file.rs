//! JSON problem format.
//!
//! Two forms are accepted. The explicit form:
//!
//! ```json
//! {
//!   "name": "qp3",
//!   "n": 3,
//!   "cone": [{"type": "orthant", "dim": 3}],
//!   "A": [[1, 1, 1]],
//!   "b": [1],
//!   "objective": {"type": "quadratic", "Q": [[...]], "c": [...]},
//!   "x0": [0.3, 0.3, 0.4]
//! }
//! ```
//!
//! and the builtin shorthand `{"builtin": "negnorm_simplex", "n": 10}` with
//! optional `p`, `seed` and `m`.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::objective::{NegHalfNormSq, Objective, Perturbed, PowerSum, Quadratic, RegularizedLoss};
use super::{builtin, read_file, BuiltinParams, ConicProblem};
use crate::cones::Cone;
use crate::error::{Error, Result};
use crate::linops::AffineData;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    /// `½ xᵀQx + cᵀx`
    Quadratic {
        #[serde(rename = "Q")]
        q: Vec<Vec<f64>>,
        c: Vec<f64>,
    },
    /// `Σ xᵢ^p`
    PowerSum { p: f64 },
    /// `-½‖x‖²`
    NegHalfNormSq,
    /// `‖Cx - d‖² + Σ xᵢ^p`
    RegularizedLoss {
        #[serde(rename = "C")]
        c: Vec<Vec<f64>>,
        d: Vec<f64>,
        p: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub name: String,
    pub n: usize,
    pub cone: Cone,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub b: Vec<f64>,
    pub objective: ObjectiveSpec,
    /// Perturbation `σ‖x‖²` added to the objective.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinSpec {
    pub builtin: String,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
}

fn dense(rows: &[Vec<f64>], ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(rows.len(), ncols);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(Error::Schema(format!(
                "{what}: row {i} has length {}, expected {ncols}",
                row.len()
            )));
        }
        for (j, &v) in row.iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

fn check_len(v: &[f64], n: usize, what: &str) -> Result<()> {
    if v.len() != n {
        return Err(Error::Schema(format!(
            "{what} has length {}, expected {n}",
            v.len()
        )));
    }
    Ok(())
}

impl ProblemFile {
    /// Validates the data and builds the problem.
    pub fn build(&self) -> Result<ConicProblem> {
        let n = self.n;
        if self.cone.dim() != n {
            return Err(Error::Schema(format!(
                "cone dimension {} does not match n = {n}",
                self.cone.dim()
            )));
        }
        let affine = match &self.a {
            None => {
                if !self.b.is_empty() {
                    return Err(Error::Schema("b given without A".into()));
                }
                AffineData::unconstrained(n)
            }
            Some(rows) => {
                let a = dense(rows, n, "A")?;
                check_len(&self.b, rows.len(), "b")?;
                AffineData::new(a, DVector::from_column_slice(&self.b))?
            }
        };
        let mut objective: Arc<dyn Objective> = match &self.objective {
            ObjectiveSpec::Quadratic { q, c } => {
                if q.len() != n {
                    return Err(Error::Schema(format!(
                        "Q has {} rows, expected {n}",
                        q.len()
                    )));
                }
                check_len(c, n, "c")?;
                Arc::new(Quadratic::new(
                    dense(q, n, "Q")?,
                    DVector::from_column_slice(c),
                ))
            }
            ObjectiveSpec::PowerSum { p } => {
                check_power(*p)?;
                Arc::new(PowerSum { p: *p })
            }
            ObjectiveSpec::NegHalfNormSq => Arc::new(NegHalfNormSq),
            ObjectiveSpec::RegularizedLoss { c, d, p } => {
                check_power(*p)?;
                check_len(d, c.len(), "d")?;
                Arc::new(RegularizedLoss::new(
                    dense(c, n, "C")?,
                    DVector::from_column_slice(d),
                    *p,
                ))
            }
        };
        if let Some(sigma) = self.sigma {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::Schema(format!("sigma {sigma} must be positive")));
            }
            objective = Arc::new(Perturbed {
                inner: objective,
                sigma,
            });
        }
        let x0 = match &self.x0 {
            Some(x) => {
                check_len(x, n, "x0")?;
                Some(DVector::from_column_slice(x))
            }
            None => None,
        };
        Ok(
            ConicProblem::new(self.name.clone(), self.cone.clone(), affine, objective, x0)?
                .with_file(self.clone()),
        )
    }
}

fn check_power(p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Schema(format!("power p = {p} must be positive")));
    }
    Ok(())
}

fn json_error(e: serde_json::Error) -> Error {
    use serde_json::error::Category;
    match e.classify() {
        Category::Data => Error::Schema(e.to_string()),
        _ => Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        },
    }
}

/// Parses a problem from JSON text (explicit or builtin shorthand).
pub fn parse_problem(text: &str) -> Result<ConicProblem> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(json_error)?;
    if value.get("builtin").is_some() {
        let spec: BuiltinSpec = serde_json::from_value(value).map_err(json_error)?;
        let params = BuiltinParams {
            n: spec.n,
            p: spec.p,
            seed: spec.seed,
            m: spec.m,
        };
        return builtin(&spec.builtin, &params);
    }
    // re-parse from text so data errors carry line information
    let file: ProblemFile = serde_json::from_str(text).map_err(json_error)?;
    file.build()
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<ConicProblem> {
    parse_problem(&read_file(path.as_ref())?)
}

/// Writes the problem's explicit description.
pub fn save_problem(problem: &ConicProblem, path: impl AsRef<Path>) -> Result<()> {
    let file = problem.file().ok_or_else(|| {
        Error::Schema(format!(
            "problem `{}` has no serializable description",
            problem.name()
        ))
    })?;
    let text = serde_json::to_string_pretty(file).map_err(|e| Error::Schema(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
