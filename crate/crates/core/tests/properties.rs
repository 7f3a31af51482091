use bethe_core::bethe::{bethe_free_energy, xi_residual, xi_star};
use bethe_core::{BethePoint, Model, PairTable};
use proptest::prelude::*;

fn unit() -> impl Strategy<Value = f64> {
    0.001f64..0.999
}

proptest! {
    #[test]
    fn xi_solves_its_quadratic(qi in unit(), qj in unit(), k in -12.0f64..12.0) {
        let alpha = k.exp_m1();
        let xi = xi_star(qi, qj, alpha);
        let scale = 1.0 + alpha.abs();
        prop_assert!(xi_residual(qi, qj, alpha, xi).abs() <= 1e-12 * scale);
    }

    #[test]
    fn xi_within_frechet_bounds(qi in unit(), qj in unit(), k in -12.0f64..12.0) {
        let xi = xi_star(qi, qj, k.exp_m1());
        prop_assert!(xi >= (qi + qj - 1.0).max(0.0) - 1e-15);
        prop_assert!(xi <= qi.min(qj) + 1e-15);
    }

    #[test]
    fn xi_is_symmetric(qi in unit(), qj in unit(), k in -8.0f64..8.0) {
        let alpha = k.exp_m1();
        prop_assert!((xi_star(qi, qj, alpha) - xi_star(qj, qi, alpha)).abs() < 1e-15);
    }

    #[test]
    fn xi_increases_with_coupling(qi in unit(), qj in unit(), k in -8.0f64..8.0) {
        let lo = xi_star(qi, qj, k.exp_m1());
        let hi = xi_star(qi, qj, (k + 0.5).exp_m1());
        prop_assert!(hi >= lo - 1e-15);
    }

    #[test]
    fn pair_table_is_a_distribution(qi in unit(), qj in unit(), k in -12.0f64..12.0) {
        let t = PairTable::from_log_coupling(qi, qj, k);
        prop_assert!(t.entries().iter().all(|&p| p > 0.0));
        prop_assert!((t.pp + t.pm - qi).abs() < 1e-12);
        prop_assert!((t.pp + t.mp - qj).abs() < 1e-12);
        prop_assert!((t.entries().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Reflecting both spins reflects the table.
        let r = PairTable::from_log_coupling(1.0 - qi, 1.0 - qj, k);
        prop_assert!((r.pp - t.mm).abs() < 1e-12 && (r.pm - t.mp).abs() < 1e-12);
        prop_assert!(t.t().unwrap() > 0.0);
    }

    #[test]
    fn free_energy_is_flip_symmetric_without_fields(
        q in proptest::collection::vec(0.01f64..0.99, 4),
        j in -1.5f64..1.5,
        beta in 0.1f64..2.0,
    ) {
        let edges = [(0, 1, j), (1, 2, -0.5 * j), (2, 3, j), (0, 3, 0.3), (0, 2, j)];
        let model = Model::new(4, edges, vec![0.0; 4], beta).unwrap();
        let a = bethe_free_energy(&model, &BethePoint::new(q.clone()).unwrap()).unwrap();
        let flipped: Vec<f64> = q.iter().map(|x| 1.0 - x).collect();
        let b = bethe_free_energy(&model, &BethePoint::new(flipped).unwrap()).unwrap();
        prop_assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
    }
}
