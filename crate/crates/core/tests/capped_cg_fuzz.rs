mod common;

use common::*;
use conic_sosp::capped_cg::nc_curvature;
use conic_sosp::{capped_cg, CappedCgParams, DirectionType, Error};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

#[test]
fn seeded_contract_fuzz() {
    let (mut sol, mut nc) = (0, 0);
    let mut over_n = 0;
    for seed in 0..400u64 {
        let (h, g, eps, kind) = cg_case_kind(seed);
        let res = capped_cg(|v| &h * v, &g, &CappedCgParams::new(eps, 0.5)).unwrap();
        // log-uniform spectra lose conjugacy in floating point and may run
        // a few iterations past n; everything else is checked strictly
        if let Err(msg) = check_cg_contract(&h, &g, eps, &res, kind != 3) {
            panic!("seed {seed}: {msg}");
        }
        if res.iterations > g.len() {
            over_n += 1;
            assert!(
                res.iterations <= g.len() + 5,
                "seed {seed}: {} iterations",
                res.iterations
            );
        }
        match res.d_type {
            DirectionType::Sol => sol += 1,
            DirectionType::Nc => nc += 1,
        }
    }
    // both outcomes are exercised
    assert!(sol > 50 && nc > 50, "sol = {sol}, nc = {nc}");
    assert!(over_n <= 10, "{over_n} runs past n");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn positive_definite_gives_solution(n in 1usize..30, seed in any::<u64>(), zeta in 0.05f64..0.95) {
        let mut r = rng(seed);
        let eigs: Vec<f64> = (0..n).map(|i| 0.1 + i as f64 / n as f64).collect();
        let h = with_spectrum(&eigs, &mut r);
        let g = normal_vec(n, &mut r);
        let params = CappedCgParams::new(0.05, zeta);
        let res = capped_cg(|v| &h * v, &g, &params).unwrap();
        prop_assert_eq!(res.d_type, DirectionType::Sol);
        prop_assert!(check_cg_contract(&h, &g, 0.05, &res, true).is_ok());
    }

    #[test]
    fn known_bound_does_not_change_contract(seed in 0u64..200) {
        let (h, g, eps, kind) = cg_case_kind(seed);
        let u = h.clone().symmetric_eigenvalues().abs().max();
        let mut params = CappedCgParams::new(eps, 0.5);
        params.u0 = u;
        let res = capped_cg(|v| &h * v, &g, &params).unwrap();
        prop_assert!(check_cg_contract(&h, &g, eps, &res, kind != 3).is_ok());
        prop_assert!(res.monitor.u >= u);
    }
}

#[test]
fn strongly_negative_direction_detected_immediately() {
    // -g is itself a direction of curvature -1
    let h = DMatrix::from_diagonal(&DVector::from_column_slice(&[-1.0, 2.0]));
    let g = DVector::from_column_slice(&[1.0, 0.0]);
    let res = capped_cg(|v| &h * v, &g, &CappedCgParams::new(0.1, 0.5)).unwrap();
    assert_eq!(res.d_type, DirectionType::Nc);
    assert_eq!(res.iterations, 0);
    assert!(nc_curvature(|v| &h * v, &res.direction).unwrap() < -0.1);
}

#[test]
fn zero_gradient_is_an_error() {
    let h = DMatrix::<f64>::identity(3, 3);
    let r = capped_cg(
        |v| &h * v,
        &DVector::zeros(3),
        &CappedCgParams::new(0.1, 0.5),
    );
    assert!(matches!(r, Err(Error::ZeroGradient)));
}

#[test]
fn products_per_iteration() {
    let (h, g, eps) = cg_case(3);
    let mut calls = 0usize;
    let res = capped_cg(
        |v| {
            calls += 1;
            &h * v
        },
        &g,
        &CappedCgParams::new(eps, 0.5),
    )
    .unwrap();
    assert_eq!(calls, res.iterations + 1);
}
