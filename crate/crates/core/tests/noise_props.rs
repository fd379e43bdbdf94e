mod common;

use jdp_bandit::noise::{compute_wishart_k, gaussian_sym_sample, wishart_dof_premise};
use jdp_bandit::tree::{budget_split, tree_depth, BudgetPath};
use jdp_bandit::{MechanismKind, NoiseMechanism};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{inv_quad, min_max_eigen};

/// For `H ⪰ ρI` and `0 ≤ c < ρ`: `‖v‖_{(H−cI)⁻¹} ≤ ‖v‖_{H⁻¹} √(ρ/(ρ−c))`.
/// Shifting up (`c < 0`) never increases the norm.
#[test]
fn shifting_down_inflates_the_inverse_norm_by_a_bounded_factor() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for instance in 0..100 {
        let d = rng.random_range(1..8);
        let rho = rng.random_range(0.01..10.0);
        let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-2.0..2.0));
        let h = &a * a.transpose() + DMatrix::identity(d, d) * rho;
        let c = rho * rng.random_range(0.0..0.99);
        let v = DVector::from_fn(d, |_, _| rng.random_range(-3.0..3.0));
        let shifted = &h - DMatrix::identity(d, d) * c;
        assert!(min_max_eigen(&shifted).0 > 0.0);
        let lhs = inv_quad(&shifted, &v).sqrt();
        let rhs = inv_quad(&h, &v).sqrt() * (rho / (rho - c)).sqrt();
        assert!(
            lhs <= rhs * (1.0 + 1e-12),
            "instance {instance}: {lhs} > {rhs}"
        );

        let up = &h + DMatrix::identity(d, d) * c;
        assert!(inv_quad(&up, &v) <= inv_quad(&h, &v) * (1.0 + 1e-12));
    }
}

#[test]
fn gaussian_node_noise_is_symmetric_with_the_right_scale() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (dim, sigma, draws) = (4, 2.5, 4000);
    let (mut diag_sq, mut off_sq) = (0.0, 0.0);
    for _ in 0..draws {
        let z = gaussian_sym_sample(dim, sigma, &mut rng);
        assert_eq!(z, z.transpose());
        diag_sq += z[(0, 0)] * z[(0, 0)];
        off_sq += z[(0, 1)] * z[(0, 1)];
    }
    let s2 = sigma * sigma;
    // Diagonal entries are N(0, 2σ²), off-diagonal entries N(0, σ²).
    assert!((diag_sq / draws as f64 / (2.0 * s2) - 1.0).abs() < 0.1);
    assert!((off_sq / draws as f64 / s2 - 1.0).abs() < 0.1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn wishart_k_meets_the_per_node_premise(
        eps in 0.01f64..20.0, delta in 1e-8f64..0.9, n in 1usize..100_000_000, d in 1usize..64
    ) {
        let m = tree_depth(n);
        let k = compute_wishart_k(eps, delta, m, d);
        let split = budget_split(eps, delta, m, BudgetPath::Wishart);
        prop_assert!(k as f64 >= wishart_dof_premise(&split, d));
    }

    #[test]
    fn bound_ratios_hold_by_construction(
        eps in 0.1f64..5.0, delta in 1e-4f64..0.5, n in 2usize..1_000_000, d in 1usize..32
    ) {
        let alpha = 1.0 / n as f64;
        let lt = 2f64.sqrt();
        let g = NoiseMechanism::private(MechanismKind::GaussianShifted, eps, delta, d, lt, n, alpha)
            .unwrap()
            .accurate_bounds()
            .unwrap();
        prop_assert_eq!(g.rho_max, 3.0 * g.rho_min);
        if let Ok(w) = NoiseMechanism::private(MechanismKind::WishartShifted, eps, delta, d, lt, n, alpha) {
            let b = w.accurate_bounds().unwrap();
            prop_assert_eq!(b.rho_max, 2.0 * b.rho_min);
            prop_assert!(b.rho_min > 0.0 && b.gamma > 0.0);
        }
    }

    #[test]
    fn overridden_shift_lands_on_the_target(
        kind in prop::sample::select(vec![MechanismKind::GaussianShifted, MechanismKind::WishartShifted]),
        log_target in -2.0f64..8.0
    ) {
        let n = 20_000;
        let base = NoiseMechanism::private(kind, 1.0, 0.1, 5, 2f64.sqrt(), n, 1.0 / n as f64).unwrap();
        let target = 10f64.powf(log_target);
        let b = base.with_rho_min(target).unwrap().accurate_bounds().unwrap();
        prop_assert!((b.rho_min - target).abs() <= 1e-9 * target);
        prop_assert!(b.rho_max >= b.rho_min);
    }
}
