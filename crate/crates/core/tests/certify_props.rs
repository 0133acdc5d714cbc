mod common;

use std::sync::Arc;

use common::*;
use conic_sosp::certify::{reduced_min_eigenvalue, scale_invariance_check};
use conic_sosp::problems::Quadratic;
use conic_sosp::{check_sosp_dense, AffineData, Cone, ConeBlock, ConicProblem, Error, Tolerances};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn random_problem(cone: Cone, m: usize, seed: u64) -> (ConicProblem, DVector<f64>) {
    let mut r = rng(seed);
    let n = cone.dim();
    let x = random_interior(&cone, &mut r);
    let a = normal_mat(m, n, &mut r);
    let b = &a * &x;
    let q = normal_mat(n, n, &mut r);
    let c = normal_vec(n, &mut r);
    let p = ConicProblem::new(
        "random",
        cone,
        AffineData::new(a, b).unwrap(),
        Arc::new(Quadratic::new(q, c)),
        None,
    )
    .unwrap();
    (p, x)
}

/// Orthonormal basis of `null(A)` from a full SVD.
fn svd_null_basis(a: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // pad A with zero rows so the SVD returns all n right singular vectors
    let mut padded = DMatrix::zeros(n, n);
    padded.rows_mut(0, a.nrows()).copy_from(a);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.unwrap();
    let cols: Vec<_> = (0..n)
        .filter(|&i| svd.singular_values[i] < 1e-10)
        .map(|i| vt.row(i).transpose())
        .collect();
    DMatrix::from_columns(&cols)
}

#[test]
fn reduced_eigenvalue_agrees_with_sampling() {
    let mut r = rng(99);
    for case in 0..40u64 {
        let n = r.random_range(2..=6usize);
        let m = r.random_range(0..n.min(3));
        let cone = if case % 2 == 0 || n < 3 {
            Cone::orthant(n)
        } else {
            Cone::new(vec![
                ConeBlock::Orthant { dim: 1 },
                ConeBlock::Soc { dim: n - 1 },
            ])
            .unwrap()
        };
        let (p, x) = random_problem(cone, m, case);
        let lam = reduced_min_eigenvalue(&p, &x).unwrap();
        let z = svd_null_basis(p.affine().a(), n);
        let hf = p.objective().hessian(&x).unwrap();
        let hb = p.cone().barrier_hessian(&x).unwrap();
        let mut best = f64::INFINITY;
        for _ in 0..10_000 {
            let d = &z * random_unit(z.ncols(), &mut r);
            let num = d.dot(&(&hf * &d));
            let den = d.dot(&(&hb * &d));
            assert!(num >= (lam - 1e-6) * den, "case {case}: sample beats λ_min");
            best = best.min(num / den);
        }
        // the sampled minimum approaches the reported one from above
        assert!(best >= lam - 1e-9);
    }
}

#[test]
fn trivial_null_space_sentinel() {
    let (p, x) = random_problem(Cone::orthant(3), 3, 4);
    let rep = check_sosp_dense(
        &p,
        &x,
        &DVector::zeros(3),
        1e9,
        1e-3,
        &Tolerances::default(),
    )
    .unwrap();
    assert_eq!(rep.sosp_min_eig, Some(f64::INFINITY));
}

#[test]
fn dense_check_size_limit() {
    let (p, x) = random_problem(Cone::orthant(501), 0, 1);
    let r = check_sosp_dense(&p, &x, &DVector::zeros(0), 1.0, 1.0, &Tolerances::default());
    assert!(matches!(r, Err(Error::Size { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn orthant_diagonal_scaling(n in 2usize..10, m in 0usize..3, seed in any::<u64>()) {
        let m = m.min(n - 1);
        let (p, x) = random_problem(Cone::orthant(n), m, seed);
        let mut r = rng(seed ^ 7);
        let lambda = normal_vec(m, &mut r);
        for _ in 0..20 {
            let w = DVector::from_fn(n, |_, _| 10f64.powf(r.random_range(-1.0..1.0)));
            let (a, b) = scale_invariance_check(&p, &x, &lambda, &w).unwrap();
            prop_assert!(rel_close(a, b, 1e-8), "{a} vs {b}");
        }
    }

    #[test]
    fn soc_blockwise_scaling(k in 2usize..6, seed in any::<u64>()) {
        let cone = Cone::new(vec![ConeBlock::Soc { dim: k }, ConeBlock::Orthant { dim: 2 }, ConeBlock::Soc { dim: 3 }])
            .unwrap();
        let n = cone.dim();
        let (p, x) = random_problem(cone, 1, seed);
        let mut r = rng(seed ^ 9);
        let lambda = normal_vec(1, &mut r);
        for _ in 0..20 {
            let (s1, s2) = (r.random_range(0.1..10.0), r.random_range(0.1..10.0));
            let w = DVector::from_fn(n, |i, _| {
                if i < k {
                    s1
                } else if i < k + 2 {
                    r.random_range(0.1..10.0)
                } else {
                    s2
                }
            });
            let (a, b) = scale_invariance_check(&p, &x, &lambda, &w).unwrap();
            prop_assert!(rel_close(a, b, 1e-8), "{a} vs {b}");
        }
    }
}
