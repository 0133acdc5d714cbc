//! Repeated solves over a list of tolerances and the empirical growth rate
//! of the iteration count.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::counters::CounterSnapshot;
use crate::error::{Error, Result};
use crate::ncgb::{solve, SolveStatus, SolverParams};
use crate::problems::ConicProblem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    pub counters: CounterSnapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `ln(iterations)` against `ln(1/ε)`; `None`
    /// with fewer than two distinct tolerances.
    pub slope: Option<f64>,
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Solves once per tolerance with `params_for(ε)`. Runs that take zero
/// steps count as one in the fit.
pub fn sweep<P>(
    problem: &ConicProblem,
    x0: &DVector<f64>,
    eps_list: &[f64],
    params_for: P,
) -> Result<SweepReport>
where
    P: Fn(f64) -> SolverParams,
{
    if eps_list.is_empty() {
        return Err(Error::Param("empty tolerance list".into()));
    }
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let r = solve(problem, x0, &params_for(eps))?;
        rows.push(SweepRow {
            eps,
            iterations: r.iterations,
            status: r.status,
            counters: r.trace.counters,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (1.0 / r.eps).ln()).collect();
    let ys: Vec<f64> = rows
        .iter()
        .map(|r| (r.iterations.max(1) as f64).ln())
        .collect();
    Ok(SweepReport {
        slope: fit_slope(&xs, &ys),
        rows,
    })
}
