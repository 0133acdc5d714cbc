//! Step scalings applied to raw directions before the line search.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linops::IterationWorkspace;

/// Sign with `sgn(0) = +1`.
pub fn sgn(t: f64) -> f64 {
    if t >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// `β / ‖Qd‖`, infinite when `Qd = 0`.
fn local_cap(ws: &IterationWorkspace, d: &DVector<f64>, beta: f64) -> f64 {
    let qn = ws.apply_q(d).norm();
    if qn == 0.0 {
        f64::INFINITY
    } else {
        beta / qn
    }
}

/// `min{1, β/‖Qd̂‖} d̂`.
pub fn scale_sol_direction(
    ws: &IterationWorkspace,
    d_hat: &DVector<f64>,
    beta: f64,
) -> Result<DVector<f64>> {
    if d_hat.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroDirection);
    }
    let s = local_cap(ws, d_hat, beta).min(1.0);
    Ok(d_hat * s)
}

/// `-sgn(gᵀd̂) min{|d̂ᵀHd̂|/‖d̂‖³, β/‖Qd̂‖} d̂`, where `curvature = d̂ᵀHd̂`.
pub fn scale_nc_direction(
    ws: &IterationWorkspace,
    d_hat: &DVector<f64>,
    curvature: f64,
    g: &DVector<f64>,
    beta: f64,
) -> Result<DVector<f64>> {
    let nd = d_hat.norm();
    if nd == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let s = (curvature.abs() / nd.powi(3)).min(local_cap(ws, d_hat, beta));
    Ok(d_hat * (-sgn(g.dot(d_hat)) * s))
}

/// `-sgn(vᵀg) min{|vᵀHv|, β/‖Qv‖} v` for a unit `v`, where
/// `curvature = vᵀHv` and `H` is the preconditioned barrier-objective Hessian.
pub fn scale_meo_direction(
    ws: &IterationWorkspace,
    v: &DVector<f64>,
    curvature: f64,
    g: &DVector<f64>,
    beta: f64,
) -> DVector<f64> {
    let s = curvature.abs().min(local_cap(ws, v, beta));
    v * (-sgn(g.dot(v)) * s)
}
