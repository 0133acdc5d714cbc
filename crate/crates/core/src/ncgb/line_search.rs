//! Backtracking line searches along `x + θʲ P d`.

use nalgebra::DVector;

use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::linops::IterationWorkspace;
use crate::problems::ConicProblem;

#[derive(Debug, Clone)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    pub x_new: DVector<f64>,
    pub phi_new: f64,
    pub backtracks: usize,
}

/// `f(x) + μB(x)`, or `+∞` outside the cone or on a non-finite value.
pub fn barrier_objective(
    problem: &ConicProblem,
    x: &DVector<f64>,
    mu: f64,
    counters: &OpCounters,
) -> f64 {
    counters.add_fun_eval(1);
    let b = match problem.cone().barrier_value(x) {
        Ok(b) => b,
        Err(_) => return f64::INFINITY,
    };
    let v = problem.objective().value(x) + mu * b;
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

/// Tries `α = θʲ` for `j = 0, 1, …, max_backtracks` and accepts the first
/// trial with `φ(x + αPd) < φ(x) - target(α)`.
#[allow(clippy::too_many_arguments)]
pub fn backtrack<T>(
    problem: &ConicProblem,
    ws: &IterationWorkspace,
    mu: f64,
    d: &DVector<f64>,
    phi0: f64,
    theta: f64,
    max_backtracks: usize,
    target: T,
) -> Result<LineSearchOutcome>
where
    T: Fn(f64) -> f64,
{
    assert!(
        d.iter().any(|&v| v != 0.0),
        "line search along a zero direction"
    );
    let pd = ws.apply_p(d);
    let x = ws.point();
    let mut alpha = 1.0;
    for j in 0..=max_backtracks {
        let trial = x + &pd * alpha;
        let phi = barrier_objective(problem, &trial, mu, ws.counters());
        if phi < phi0 - target(alpha) {
            return Ok(LineSearchOutcome {
                alpha,
                x_new: trial,
                phi_new: phi,
                backtracks: j,
            });
        }
        alpha *= theta;
    }
    Err(Error::LineSearchFailure(max_backtracks))
}

/// Quadratic decrease `η √ε α² ‖d‖²`.
#[allow(clippy::too_many_arguments)]
pub fn line_search_sol(
    problem: &ConicProblem,
    ws: &IterationWorkspace,
    mu: f64,
    d: &DVector<f64>,
    phi0: f64,
    epsilon: f64,
    eta: f64,
    theta: f64,
    max_backtracks: usize,
) -> Result<LineSearchOutcome> {
    let c = eta * epsilon.sqrt() * d.norm_squared();
    backtrack(problem, ws, mu, d, phi0, theta, max_backtracks, |a| {
        c * a * a
    })
}

/// Cubic decrease `η α² ‖d‖³ / 2`.
#[allow(clippy::too_many_arguments)]
pub fn line_search_nc(
    problem: &ConicProblem,
    ws: &IterationWorkspace,
    mu: f64,
    d: &DVector<f64>,
    phi0: f64,
    eta: f64,
    theta: f64,
    max_backtracks: usize,
) -> Result<LineSearchOutcome> {
    let c = eta * d.norm().powi(3) / 2.0;
    backtrack(problem, ws, mu, d, phi0, theta, max_backtracks, |a| {
        c * a * a
    })
}
