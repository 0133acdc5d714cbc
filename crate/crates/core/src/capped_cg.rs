//! Capped conjugate gradient for `(H + 2εI) d = -g` with symmetric, possibly
//! indefinite `H`.
//!
//! The method either returns an approximate solution (`Sol`) with
//! `‖(H + 2εI)d + g‖ ≤ ζ̂‖g‖` and `dᵀHd ≥ -ε‖d‖²`, or a direction of
//! sufficiently negative curvature (`Nc`) with `dᵀHd < -ε‖d‖²`. An estimate
//! `U` of `‖H‖` is grown from observed ratios `‖Hv‖/‖v‖`; it drives the
//! accuracy `ζ̂` and the convergence-rate monitor `√T τ^{j/2}`.
//!
//! One product with `H` is spent per iteration (on the search direction).
//! `Hy` and `Hr` are carried along by recurrences, so the `U` updates cost no
//! extra products.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Output classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DirectionType {
    #[serde(rename = "SOL")]
    Sol,
    #[serde(rename = "NC")]
    Nc,
}

#[derive(Debug, Clone, Copy)]
pub struct CappedCgParams {
    /// Damping ε in (0, 1).
    pub epsilon: f64,
    /// Relative accuracy ζ in (0, 1).
    pub zeta: f64,
    /// Known bound on `‖H‖`, 0 if unknown.
    pub u0: f64,
    /// Safety cap on iterations; `None` means `10 n + 100`.
    pub max_iters_hard: Option<usize>,
}

impl CappedCgParams {
    pub fn new(epsilon: f64, zeta: f64) -> Self {
        Self {
            epsilon,
            zeta,
            u0: 0.0,
            max_iters_hard: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Param(format!(
                "capped CG epsilon {} not in (0,1)",
                self.epsilon
            )));
        }
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(Error::Param(format!(
                "capped CG zeta {} not in (0,1)",
                self.zeta
            )));
        }
        if !(self.u0 >= 0.0) {
            return Err(Error::Param(format!(
                "capped CG bound U {} is negative",
                self.u0
            )));
        }
        Ok(())
    }
}

/// The adaptive quantities `U, κ, ζ̂, τ, T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgMonitor {
    pub u: f64,
    pub kappa: f64,
    pub zeta_hat: f64,
    pub tau: f64,
    pub t: f64,
}

impl CgMonitor {
    fn new(u: f64, epsilon: f64, zeta: f64) -> Self {
        let kappa = (u + 2.0 * epsilon) / epsilon;
        let sk = kappa.sqrt();
        let tau = sk / (sk + 1.0);
        Self {
            u,
            kappa,
            zeta_hat: zeta / (3.0 * kappa),
            tau,
            t: 4.0 * kappa.powi(4) / (1.0 - tau.sqrt()).powi(2),
        }
    }

    /// Smallest `J ≥ 0` with `√T τ^{J/2} ≤ ζ̂`.
    pub fn iteration_bound(&self) -> usize {
        let ratio = self.t.sqrt() / self.zeta_hat;
        if ratio <= 1.0 {
            return 0;
        }
        let j = (2.0 * ratio.ln() / (1.0 / self.tau).ln()).ceil();
        let mut j = j.max(0.0) as usize;
        // guard the ceil against roundoff on either side
        while j > 0 && self.t.sqrt() * self.tau.powf((j - 1) as f64 / 2.0) <= self.zeta_hat {
            j -= 1;
        }
        while self.t.sqrt() * self.tau.powf(j as f64 / 2.0) > self.zeta_hat {
            j += 1;
        }
        j
    }
}

#[derive(Debug, Clone)]
pub struct CappedCgResult {
    pub d_type: DirectionType,
    pub direction: DVector<f64>,
    pub iterations: usize,
    /// Final values of `U, κ, ζ̂, τ, T`.
    pub monitor: CgMonitor,
}

/// Runs capped CG on `(H + 2εI) d = -g`; `h` evaluates `v ↦ Hv`.
pub fn capped_cg<F>(mut h: F, g: &DVector<f64>, params: &CappedCgParams) -> Result<CappedCgResult>
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    params.validate()?;
    let n = g.len();
    let eps = params.epsilon;
    let hard_cap = params.max_iters_hard.unwrap_or(10 * n + 100);
    let r0_norm = g.norm();
    if r0_norm == 0.0 {
        return Err(Error::ZeroGradient);
    }

    let mut mon = CgMonitor::new(params.u0, eps, params.zeta);
    let grow = |mon: &mut CgMonitor, hv: &DVector<f64>, v: &DVector<f64>| {
        let nv = v.norm();
        let nhv = hv.norm();
        if nhv > mon.u * nv {
            *mon = CgMonitor::new(nhv / nv, eps, params.zeta);
        }
    };
    // vᵀ(H + 2εI)v from v and Hv
    let damped_curv =
        |v: &DVector<f64>, hv: &DVector<f64>| v.dot(hv) + 2.0 * eps * v.norm_squared();

    let mut y = DVector::zeros(n);
    let mut hy = DVector::zeros(n);
    let mut r = g.clone();
    let mut p = -g;
    let mut hp = h(&p);

    let finish = |d_type, direction, iterations, monitor| {
        Ok(CappedCgResult {
            d_type,
            direction,
            iterations,
            monitor,
        })
    };

    let mut p_curv = damped_curv(&p, &hp);
    if p_curv < eps * p.norm_squared() {
        return finish(DirectionType::Nc, p, 0, mon);
    }
    grow(&mut mon, &hp, &p);

    // y⁰..yʲ with their H-products, for the final negative-curvature search
    let mut history: Vec<(DVector<f64>, DVector<f64>)> = vec![(y.clone(), hy.clone())];
    let mut j = 0usize;
    loop {
        if j >= hard_cap {
            return Err(Error::HardCapExceeded(hard_cap));
        }
        let rr = r.norm_squared();
        let alpha = rr / p_curv;
        y.axpy(alpha, &p, 1.0);
        hy.axpy(alpha, &hp, 1.0);
        r.axpy(alpha, &hp, 1.0);
        r.axpy(alpha * 2.0 * eps, &p, 1.0);
        let beta = r.norm_squared() / rr;
        let p_next = -&r + &p * beta;
        let hp_next = h(&p_next);
        // Hr^{j+1} = β Hp^j - Hp^{j+1}
        let hr = &hp * beta - &hp_next;
        p = p_next;
        hp = hp_next;
        j += 1;

        grow(&mut mon, &hp, &p);
        if y.norm() > 0.0 {
            grow(&mut mon, &hy, &y);
        }
        if r.norm() > 0.0 {
            grow(&mut mon, &hr, &r);
        }
        history.push((y.clone(), hy.clone()));

        let r_norm = r.norm();
        p_curv = damped_curv(&p, &hp);
        if damped_curv(&y, &hy) < eps * y.norm_squared() {
            return finish(DirectionType::Nc, y, j, mon);
        } else if r_norm <= mon.zeta_hat * r0_norm {
            return finish(DirectionType::Sol, y, j, mon);
        } else if p_curv < eps * p.norm_squared() {
            return finish(DirectionType::Nc, p, j, mon);
        } else if r_norm > mon.t.sqrt() * mon.tau.powf(j as f64 / 2.0) * r0_norm {
            let alpha = r.norm_squared() / p_curv;
            let y_next = &y + &p * alpha;
            let hy_next = &hy + &hp * alpha;
            for (yi, hyi) in history.iter().take(j) {
                let d = &y_next - yi;
                let hd = &hy_next - hyi;
                if damped_curv(&d, &hd) < eps * d.norm_squared() {
                    return finish(DirectionType::Nc, d, j, mon);
                }
            }
            return Err(Error::CurvatureSearchFailed);
        }
    }
}

/// `dᵀHd / ‖d‖²` with one product.
pub fn nc_curvature<F>(mut h: F, d: &DVector<f64>) -> Result<f64>
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    let dd = d.norm_squared();
    if dd == 0.0 {
        return Err(Error::ZeroDirection);
    }
    Ok(d.dot(&h(d)) / dd)
}
