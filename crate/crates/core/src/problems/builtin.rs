//! Built-in nonconvex test instances. Each ships a strictly feasible `x0`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::file::{ObjectiveSpec, ProblemFile};
use super::ConicProblem;
use crate::cones::{Cone, ConeBlock};
use crate::error::{Error, Result};

pub const BUILTIN_NAMES: [&str; 5] = [
    "pnorm_simplex",
    "negnorm_simplex",
    "nonconvex_qp_simplex",
    "regularized_loss",
    "soc_quadratic",
];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BuiltinParams {
    pub n: usize,
    /// Exponent for the power objectives (default 0.5).
    pub p: Option<f64>,
    /// Seed for randomly generated data (default 0).
    pub seed: Option<u64>,
    /// Number of equality constraints for `soc_quadratic` (default 2).
    pub m: Option<usize>,
}

fn normal_matrix(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut *rng);
                    scale * z
                })
                .collect()
        })
        .collect()
}

fn symmetric_normal(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let g = normal_matrix(n, n, 1.0, rng);
    let g = DMatrix::from_fn(n, n, |i, j| g[i][j]);
    let s = (&g + g.transpose()) * 0.5;
    s.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn simplex(name: String, n: usize, objective: ObjectiveSpec, x0: Vec<f64>) -> ProblemFile {
    ProblemFile {
        name,
        n,
        cone: Cone::orthant(n),
        a: Some(vec![vec![1.0; n]]),
        b: vec![1.0],
        objective,
        sigma: None,
        x0: Some(x0),
    }
}

/// Builds a named instance.
pub fn builtin(name: &str, params: &BuiltinParams) -> Result<ConicProblem> {
    let n = params.n;
    let p = params.p.unwrap_or(0.5);
    let seed = params.seed.unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let min_n = if name == "soc_quadratic" { 2 } else { 1 };
    if n < min_n {
        return Err(Error::Param(format!("builtin `{name}` needs n >= {min_n}")));
    }
    let file = match name {
        "pnorm_simplex" => {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::Param(format!(
                    "pnorm_simplex needs p in (0,1), got {p}"
                )));
            }
            simplex(
                format!("pnorm_simplex_{n}"),
                n,
                ObjectiveSpec::PowerSum { p },
                vec![1.0 / n as f64; n],
            )
        }
        "negnorm_simplex" => {
            // the simplex center is itself an approximate second-order point
            // in the barrier geometry, so start from a tilted interior point
            let w: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 / n as f64).collect();
            let s: f64 = w.iter().sum();
            simplex(
                format!("negnorm_simplex_{n}"),
                n,
                ObjectiveSpec::NegHalfNormSq,
                w.iter().map(|v| v / s).collect(),
            )
        }
        "nonconvex_qp_simplex" => {
            let q = symmetric_normal(n, &mut rng);
            let c = normal_matrix(1, n, 0.1, &mut rng).remove(0);
            simplex(
                format!("nonconvex_qp_simplex_{n}_s{seed}"),
                n,
                ObjectiveSpec::Quadratic { q, c },
                vec![1.0 / n as f64; n],
            )
        }
        "regularized_loss" => {
            let c = normal_matrix(n, n, 1.0 / (n as f64).sqrt(), &mut rng);
            let d = normal_matrix(1, n, 1.0, &mut rng).remove(0);
            ProblemFile {
                name: format!("regularized_loss_{n}_s{seed}"),
                n,
                cone: Cone::orthant(n),
                a: None,
                b: vec![],
                objective: ObjectiveSpec::RegularizedLoss { c, d, p },
                sigma: None,
                x0: Some(vec![1.0; n]),
            }
        }
        "soc_quadratic" => {
            let m = params.m.unwrap_or(2);
            if m == 0 || m > n {
                return Err(Error::Param(format!(
                    "soc_quadratic needs 1 <= m <= n, got m = {m}"
                )));
            }
            // t = 1 plus m-1 random homogeneous cuts through the axis
            let mut a = vec![{
                let mut row = vec![0.0; n];
                row[0] = 1.0;
                row
            }];
            for row in normal_matrix(m - 1, n - 1, 1.0, &mut rng) {
                let mut full = vec![0.0];
                full.extend(row);
                a.push(full);
            }
            let mut b = vec![0.0; m];
            b[0] = 1.0;
            let q = symmetric_normal(n, &mut rng);
            let c = normal_matrix(1, n, 0.1, &mut rng).remove(0);
            let mut x0 = vec![0.0; n];
            x0[0] = 1.0;
            ProblemFile {
                name: format!("soc_quadratic_{n}_m{m}_s{seed}"),
                n,
                cone: Cone::new(vec![ConeBlock::Soc { dim: n }])?,
                a: Some(a),
                b,
                objective: ObjectiveSpec::Quadratic { q, c },
                sigma: None,
                x0: Some(x0),
            }
        }
        other => return Err(Error::UnknownProblem(other.to_string())),
    };
    file.build()
}
