//! Randomized Lanczos minimum eigenvalue oracle.
//!
//! Given symmetric `H`, tolerance `ε` and failure probability `δ`, either
//! returns a unit `v` with `vᵀHv ≤ -ε/2`, or certifies `λ_min(H) ≥ -ε`
//! with probability at least `1 - √(2.75n) δ^(‖H‖^{-1/2})`. The Krylov space
//! is grown from a uniformly random unit vector for at most
//! `N(ε, δ) = min{n, 1 + ⌈ε^{-1/2} ln δ^{-1}⌉}` steps.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seed for the oracle's random start vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Deterministic sub-seed for the `k`-th independent use.
    pub fn derive(self, k: u64) -> RngSeed {
        // splitmix64 step
        let mut z = self
            .0
            .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(k.wrapping_add(1)));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        RngSeed(z ^ (z >> 31))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeoKind {
    NegativeCurvature {
        v: DVector<f64>,
        /// `vᵀHv`, checked with an independent product.
        curvature: f64,
    },
    Certified {
        /// `1 - √(2.75n) δ^(‖H‖_est^{-1/2})`, clamped to `[0, 1]`.
        probability_bound: f64,
        /// Power-iteration estimate of `‖H‖`.
        estimated_norm: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeoOutcome {
    pub kind: MeoKind,
    pub lanczos_iterations: usize,
}

impl MeoOutcome {
    pub fn is_certified(&self) -> bool {
        matches!(self.kind, MeoKind::Certified { .. })
    }
}

const POWER_STEPS: usize = 10;

/// `N(ε, δ)`.
pub fn lanczos_iteration_cap(n: usize, eps: f64, delta: f64) -> usize {
    let k = (eps.powf(-0.5) * (1.0 / delta).ln()).ceil();
    let k = if k.is_finite() && k >= 0.0 {
        k as usize
    } else {
        usize::MAX - 1
    };
    n.min(1 + k)
}

/// Probability that a certificate is correct, given `‖H‖`.
pub fn certificate_probability(n: usize, delta: f64, h_norm: f64) -> f64 {
    if h_norm <= 0.0 {
        return 1.0;
    }
    let p = 1.0 - (2.75 * n as f64).sqrt() * delta.powf(1.0 / h_norm.sqrt());
    p.clamp(0.0, 1.0)
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        let nv: f64 = v.norm();
        if nv > 0.0 {
            return v / nv;
        }
    }
}

/// Smallest eigenpair of the symmetric tridiagonal matrix with diagonal
/// `alphas` and off-diagonal `betas`. The eigenvector is unit length with
/// its first nonzero entry positive.
pub fn lanczos_tridiagonal_min_ritz(alphas: &[f64], betas: &[f64]) -> (f64, DVector<f64>) {
    let k = alphas.len();
    assert!(k >= 1 && betas.len() + 1 == k, "tridiagonal shape mismatch");
    if k == 1 {
        return (alphas[0], DVector::from_element(1, 1.0));
    }
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let idx = eig.eigenvalues.imin();
    let mut c = eig.eigenvectors.column(idx).clone_owned();
    c /= c.norm();
    if let Some(first) = c.iter().find(|v| v.abs() > 1e-14) {
        if *first < 0.0 {
            c = -c;
        }
    }
    (eig.eigenvalues[idx], c)
}

/// Runs the oracle. `h` evaluates `v ↦ Hv` for an `n×n` symmetric `H`.
pub fn min_eig_oracle<F>(
    mut h: F,
    n: usize,
    eps: f64,
    delta: f64,
    seed: RngSeed,
) -> Result<MeoOutcome>
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    if !(eps > 0.0) {
        return Err(Error::Param(format!(
            "oracle tolerance {eps} must be positive"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Param(format!(
            "oracle probability {delta} not in (0,1)"
        )));
    }
    if n == 0 {
        return Ok(MeoOutcome {
            kind: MeoKind::Certified {
                probability_bound: 1.0,
                estimated_norm: 0.0,
            },
            lanczos_iterations: 0,
        });
    }
    let cap = lanczos_iteration_cap(n, eps, delta);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);

    let mut basis: Vec<DVector<f64>> = vec![random_unit(n, &mut rng)];
    let mut alphas: Vec<f64> = Vec::with_capacity(cap);
    let mut betas: Vec<f64> = Vec::with_capacity(cap);
    let mut iterations = 0;
    let mut scale = 0.0f64;

    while iterations < cap {
        let q = basis.last().expect("nonempty basis").clone();
        let mut w = h(&q);
        iterations += 1;
        let alpha = q.dot(&w);
        w.axpy(-alpha, &q, 1.0);
        if let Some(&b) = betas.last() {
            w.axpy(-b, &basis[basis.len() - 2], 1.0);
        }
        // full reorthogonalization, twice
        for _ in 0..2 {
            for qi in &basis {
                let c = qi.dot(&w);
                w.axpy(-c, qi, 1.0);
            }
        }
        alphas.push(alpha);
        scale = scale
            .max(alpha.abs())
            .max(betas.last().copied().unwrap_or(0.0));

        let (theta, coeffs) = lanczos_tridiagonal_min_ritz(&alphas, &betas);
        if theta <= -eps / 2.0 {
            let mut v = DVector::zeros(n);
            for (qi, &ci) in basis.iter().zip(coeffs.iter()) {
                v.axpy(ci, qi, 1.0);
            }
            v /= v.norm();
            let curvature = v.dot(&h(&v));
            if curvature <= -eps / 2.0 {
                return Ok(MeoOutcome {
                    kind: MeoKind::NegativeCurvature { v, curvature },
                    lanczos_iterations: iterations,
                });
            }
        }

        let beta = w.norm();
        if beta <= 1e-12 * scale.max(f64::MIN_POSITIVE) || beta == 0.0 {
            // invariant subspace found
            break;
        }
        if iterations == cap {
            break;
        }
        betas.push(beta);
        basis.push(w / beta);
    }

    let estimated_norm = estimate_norm(&mut h, n, &mut rng);
    Ok(MeoOutcome {
        kind: MeoKind::Certified {
            probability_bound: certificate_probability(n, delta, estimated_norm),
            estimated_norm,
        },
        lanczos_iterations: iterations,
    })
}

fn estimate_norm<F>(h: &mut F, n: usize, rng: &mut ChaCha8Rng) -> f64
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    let mut v = random_unit(n, rng);
    let mut est = 0.0;
    for _ in 0..POWER_STEPS {
        let w = h(&v);
        est = w.norm();
        if est == 0.0 {
            break;
        }
        v = w / est;
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn iteration_cap_formula() {
        assert_eq!(lanczos_iteration_cap(1000, 0.01, 0.01), 48);
        assert_eq!(lanczos_iteration_cap(5, 0.01, 0.01), 5);
    }

    #[test]
    fn ritz_examples() {
        let (v, c) = lanczos_tridiagonal_min_ritz(&[3.0], &[]);
        assert_eq!(v, 3.0);
        assert_eq!(c, DVector::from_element(1, 1.0));

        let (v, c) = lanczos_tridiagonal_min_ritz(&[0.0, 0.0], &[1.0]);
        assert_relative_eq!(v, -1.0, epsilon = 1e-14);
        let s = 0.5f64.sqrt();
        assert_relative_eq!(c, DVector::from_vec(vec![s, -s]), epsilon = 1e-14);

        let (v, c) = lanczos_tridiagonal_min_ritz(&[2.0, 2.0, 2.0], &[1.0, 1.0]);
        assert_relative_eq!(v, 2.0 - 2f64.sqrt(), epsilon = 1e-14);
        let expect = DVector::from_vec(vec![1.0, -2f64.sqrt(), 1.0]) / 2.0;
        assert_relative_eq!(c, expect, epsilon = 1e-12);
    }

    #[test]
    fn identity_is_certified() {
        let out = min_eig_oracle(|u| u.clone(), 5, 0.01, 0.01, RngSeed(1)).unwrap();
        assert!(out.is_certified());
        match out.kind {
            MeoKind::Certified { estimated_norm, .. } => {
                assert_relative_eq!(estimated_norm, 1.0, epsilon = 1e-12)
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn finds_negative_direction() {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 2.0]));
        let out = min_eig_oracle(|u| &h * u, 2, 0.1, 0.01, RngSeed(3)).unwrap();
        match out.kind {
            MeoKind::NegativeCurvature { v, curvature } => {
                assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-12);
                assert!(curvature <= -0.05);
                assert_relative_eq!(v[0].abs(), 1.0, epsilon = 1e-8);
            }
            _ => panic!("expected negative curvature"),
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let h = DMatrix::from_fn(6, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let h = &h + h.transpose();
        let a = min_eig_oracle(|u| &h * u, 6, 0.1, 0.01, RngSeed(42)).unwrap();
        let b = min_eig_oracle(|u| &h * u, 6, 0.1, 0.01, RngSeed(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parameter_validation() {
        assert!(min_eig_oracle(|u| u.clone(), 2, 0.0, 0.5, RngSeed(0)).is_err());
        assert!(min_eig_oracle(|u| u.clone(), 2, 0.1, 1.0, RngSeed(0)).is_err());
    }

    #[test]
    fn probability_bound_formula() {
        assert_eq!(certificate_probability(10, 0.01, 0.0), 1.0);
        assert_relative_eq!(
            certificate_probability(10, 0.01, 1.0),
            1.0 - 27.5f64.sqrt() * 0.01
        );
        assert_eq!(certificate_probability(10, 0.01, 1e6), 0.0);
    }
}
