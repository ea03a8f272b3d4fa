mod common;

use common::{random_spd, random_vector};
use ncg_core::cg::{truncated_cg, verify_step_constants, SpectrumBounds, StepConstants};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn residual_and_curvature_contracts(n in 1usize..40, seed in any::<u64>(), eta in 1e-9f64..0.99) {
        let h = random_spd(n, 1.0, 4.0, seed);
        let g = random_vector(n, seed ^ 0xABCD);
        prop_assume!(g.norm() > 1e-6);
        let res = truncated_cg(&h, &g, eta, None).unwrap();
        prop_assert!(res.residual_norm() <= eta * g.norm());
        prop_assert!(((&h * &res.step + &g) - &res.residual).norm() <= 1e-12 * g.norm());
        let sg = res.step.dot(&g);
        prop_assert!((res.curvature_product + sg).abs() <= 1e-10 * sg.abs());
        prop_assert!(res.iterations <= n);
    }

    #[test]
    fn step_quality_consequences(n in 1usize..30, seed in any::<u64>(), eta_frac in 0.01f64..0.99) {
        let eta_bar = 0.5;
        let eta = eta_frac * eta_bar;
        let bounds = SpectrumBounds::new(1.0, 4.0).unwrap();
        let h = random_spd(n, 1.0, 4.0, seed);
        let g = random_vector(n, seed.wrapping_add(1));
        prop_assume!(g.norm() > 1e-6);
        let res = truncated_cg(&h, &g, eta, None).unwrap();
        prop_assert!(verify_step_constants(&res, &g, bounds, eta_bar).all_ok());
        let k = StepConstants::worst_case(bounds, eta_bar);
        let (gn, sn, gs) = (g.norm(), res.step.norm(), g.dot(&res.step));
        let cosine = gs.abs() / (gn * sn);
        prop_assert!(cosine >= k.beta * k.kappa1 * (1.0 - 1e-12) && cosine <= 1.0 + 1e-12);
        prop_assert!(-gs >= k.beta * k.kappa1 * k.kappa1 * gn * gn * (1.0 - 1e-12));
    }
}

#[test]
fn constants_hold_on_sampled_instances() {
    let bounds = SpectrumBounds::new(1.0, 4.0).unwrap();
    for inst in 0..5u64 {
        let h = random_spd(20, 1.0, 4.0, 500 + inst);
        for j in 0..100u64 {
            let g = random_vector(20, 10_000 * inst + j);
            let res = truncated_cg(&h, &g, 0.25, None).unwrap();
            assert!(verify_step_constants(&res, &g, bounds, 0.5).all_ok(), "instance {inst}, rhs {j}");
        }
    }
}

#[test]
fn explicit_residual_refresh_keeps_long_solves_accurate() {
    // 120 distinct eigenvalues over a wide range force more than 50 iterations.
    let h = random_spd(120, 1.0, 1e4, 17);
    let g = random_vector(120, 18);
    let res = truncated_cg(&h, &g, 1e-10, Some(1000)).unwrap();
    assert!(res.iterations > 50);
    assert!((&h * &res.step + &g).norm() <= 1e-10 * g.norm());
}
