//! Fixtures shared by the solver benchmarks.

use conic_sosp::problems::BuiltinParams;
use conic_sosp::{builtin, ConicProblem};
use nalgebra::DVector;

/// A builtin instance of size `n` with its shipped starting point.
pub fn fixture(name: &str, n: usize) -> (ConicProblem, DVector<f64>) {
    let params = BuiltinParams {
        n,
        ..BuiltinParams::default()
    };
    let problem = builtin(name, &params).expect("builtin instance");
    let x0 = problem.x0().expect("builtin ships x0").clone();
    (problem, x0)
}
