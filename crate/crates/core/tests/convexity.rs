mod common;

use bethe_core::bethe::bethe_hessian;
use bethe_core::convexity::{
    certify, critical_beta_diag_dominance, det_h2x2_raw, diag_dominance_holds, edge_beta_star,
    r_plus, r_plus_infimum, sum_decomposition_hessians, symmetric_model_thresholds,
};
use bethe_core::rng::SeededRng;
use bethe_core::{BethePoint, Model};
use common::{complete, random_model, random_point};

#[test]
fn edge_hessians_sum_to_full_hessian() {
    let mut rng = SeededRng::new(11);
    for _ in 0..50 {
        let n = 2 + (rng.unit() * 8.0) as usize;
        let beta = rng.uniform(0.1, 2.0);
        let model = random_model(&mut rng, n, 0.5, 1.0, beta);
        let q = random_point(&mut rng, n, 0.05, 0.95);
        let full = bethe_hessian(&model, &q).unwrap();
        let sum = sum_decomposition_hessians(&model, &q).unwrap().total(n);
        assert!(sum.max_abs_diff(full.matrix()) < 1e-10);
    }
}

#[test]
fn det_changes_sign_at_edge_threshold() {
    let mut rng = SeededRng::new(12);
    let mut checked = 0;
    while checked < 40 {
        let d_i = 2 + (rng.unit() * 8.0) as usize;
        let d_j = 2 + (rng.unit() * 8.0) as usize;
        let j = rng.uniform(-1.5, 1.5);
        let b = edge_beta_star(d_i, d_j, j);
        if !b.is_finite() {
            continue;
        }
        checked += 1;
        let det = |beta: f64| det_h2x2_raw(d_i, d_j, 0.5, 0.5, (4.0 * beta * j).exp_m1()).unwrap();
        assert!(det(b).abs() < 1e-8, "det at β* = {}", det(b));
        assert!(det(b * (1.0 - 1e-6)) > 0.0);
        assert!(det(b * (1.0 + 1e-6)) < 0.0);
    }
}

#[test]
fn edge_threshold_closed_form() {
    // K4: every edge joins two degree-3 nodes, D = 3.
    let b = edge_beta_star(3, 3, 1.0);
    assert!((b - 0.5 * 3f64.ln()).abs() < 1e-12);
    assert!((b - (0.5f64).atanh()).abs() < 1e-12);
    assert_eq!(edge_beta_star(1, 7, 1.0), f64::INFINITY);
    assert_eq!(edge_beta_star(2, 2, 1.0), f64::INFINITY);
    assert_eq!(edge_beta_star(4, 4, 0.0), f64::INFINITY);
    assert_eq!(edge_beta_star(4, 5, -0.7), edge_beta_star(4, 5, 0.7));
}

#[test]
fn degree_two_edges_still_need_a_threshold() {
    // K_{2,3}: the 2–3 edges have D = 1, and the Hessian does lose
    // definiteness once β is large enough.
    let edges = [(0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4)].map(|(a, b)| (a, b, 1.0));
    let model = Model::new(5, edges, vec![0.0; 5], 4.0).unwrap();
    let b = edge_beta_star(3, 2, 1.0);
    assert!(b.is_finite() && b < 4.0);
    let h = bethe_hessian(&model, &BethePoint::uniform(5, 0.5).unwrap()).unwrap();
    assert!(!h.is_positive_definite());
}

#[test]
fn det_decreases_with_beta() {
    let mut rng = SeededRng::new(13);
    for _ in 0..25 {
        let (qi, qj) = (rng.uniform(0.02, 0.98), rng.uniform(0.02, 0.98));
        // D = d_i d_j − d_i − d_j > 0 needs both degrees ≥ 2, not both 2.
        let d_i = 3 + (rng.unit() * 5.0) as usize;
        let d_j = 2 + (rng.unit() * 6.0) as usize;
        let j = rng.uniform(0.2, 1.0) * if rng.unit() < 0.5 { -1.0 } else { 1.0 };
        let dets: Vec<f64> = (1..=20)
            .map(|k| {
                let beta = 0.1 * k as f64;
                det_h2x2_raw(d_i, d_j, qi, qj, (4.0 * beta * j).exp_m1()).unwrap()
            })
            .collect();
        assert!(dets.windows(2).all(|w| w[1] < w[0]), "{dets:?}");
    }
    // With D = 0 the temperature drops out entirely.
    let flat: Vec<f64> = [0.1, 1.0, 3.0]
        .iter()
        .map(|b: &f64| det_h2x2_raw(2, 2, 0.3, 0.8, (4.0 * b).exp_m1()).unwrap())
        .collect();
    assert!(flat.iter().all(|v| (v - flat[0]).abs() < 1e-9 * flat[0]));
}

#[test]
fn symmetric_thresholds_match_closed_forms() {
    for d in 3..=20usize {
        for j in [0.5, 1.0, -2.0] {
            let t = symmetric_model_thresholds(d, j).unwrap();
            let (df, aj) = (d as f64, f64::abs(j));
            let dob = if d % 2 == 1 {
                (1.0 / df).atanh() / aj
            } else {
                (2.0 / df).atanh() / (2.0 * aj)
            };
            let close = |a: f64, b: f64| (a - b).abs() < 1e-12 * b.max(1.0);
            assert!(close(t.exact, (1.0 / (df - 1.0)).atanh() / aj));
            assert!(close(t.dobrushin, dob));
            assert!(close(t.simon, 1.0 / (aj * df)));
            assert!(close(
                t.diag_dominance,
                ((df + 1.0) / (df - 1.0)).powi(2).ln() / (4.0 * aj)
            ));
            assert!(close(t.heskes, ((df - 1.0) / (df - 2.0)).ln() / (4.0 * aj)));
        }
    }
    assert!(symmetric_model_thresholds(2, 1.0).is_err());
    assert!(symmetric_model_thresholds(3, 0.0).is_err());
}

#[test]
fn critical_beta_on_regular_graphs() {
    // K_{d+1} is d-regular with uniform J: the bisection must land on the
    // closed-form diagonal-dominance threshold.
    for d in 3..=7 {
        for j in [0.5, 1.0] {
            let model = complete(d + 1, j, 0.0, 1.0);
            let b = critical_beta_diag_dominance(&model, 5.0).unwrap().unwrap();
            let expect = symmetric_model_thresholds(d, j).unwrap().diag_dominance;
            assert!((b - expect).abs() < 1e-3, "d={d} J={j}: {b} vs {expect}");
            assert!(b >= expect);
        }
    }
}

#[test]
fn critical_beta_ignores_model_beta() {
    let mut rng = SeededRng::new(14);
    let model = random_model(&mut rng, 8, 0.5, 1.0, 0.3);
    let a = critical_beta_diag_dominance(&model, 5.0).unwrap();
    let b = critical_beta_diag_dominance(&model.with_beta(1.7).unwrap(), 5.0).unwrap();
    assert_eq!(a, b);
}

#[test]
fn low_degree_graphs() {
    // Leaves impose nothing.
    let pair = Model::new(2, [(0, 1, 3.0)], vec![0.0; 2], 1.0).unwrap();
    assert_eq!(critical_beta_diag_dominance(&pair, 5.0).unwrap(), None);
    // A uniform cycle is 2-regular: (1/4) log 9 / J.
    let cycle = Model::new(5, (0..5).map(|k| (k, (k + 1) % 5, 0.5)), vec![0.0; 5], 1.0).unwrap();
    let b = critical_beta_diag_dominance(&cycle, 5.0).unwrap().unwrap();
    assert!((b - 9f64.ln() / 2.0).abs() < 1e-3, "{b}");
}

#[test]
fn diagonal_dominance_is_monotone_in_beta() {
    let mut rng = SeededRng::new(15);
    for _ in 0..10 {
        let model = random_model(&mut rng, 7, 0.6, 1.0, 0.1);
        let verdicts: Vec<bool> = (1..=20)
            .map(|k| diag_dominance_holds(&model.with_beta(0.1 * k as f64).unwrap()).unwrap())
            .collect();
        assert!(verdicts.windows(2).all(|w| w[0] || !w[1]), "{verdicts:?}");
    }
}

#[test]
fn r_plus_infimum_bounds_a_dense_scan() {
    let mut rng = SeededRng::new(16);
    for _ in 0..25 {
        let qi = rng.uniform(0.02, 0.98);
        let alpha = rng.uniform(0.0, 3.0).exp_m1();
        let inf = r_plus_infimum(qi, alpha);
        let scan = (1..2000)
            .map(|k| r_plus(qi, k as f64 / 2000.0, alpha).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(
            scan >= inf * (1.0 - 1e-9),
            "scan {scan} below infimum {inf}"
        );
        // The infimum is approached at the boundary.
        let edge = if qi <= 0.5 { 1e-7 } else { 1.0 - 1e-7 };
        let near = r_plus(qi, edge, alpha).unwrap();
        assert!((near - inf).abs() < 1e-4 * inf, "{near} vs {inf}");
    }
}

#[test]
fn certify_extremes() {
    let mut rng = SeededRng::new(17);
    let hot = random_model(&mut rng, 10, 0.5, 1.0, 1e-6);
    let r = certify(&hot).unwrap();
    assert!(r.diag_dominance_convex && r.sum_decomposition_convex);

    let cold = complete(10, 1.0, 0.0, 2.0);
    let r = certify(&cold).unwrap();
    assert!(!r.diag_dominance_convex && !r.sum_decomposition_convex);
    assert!(!r.is_certified());
}

#[test]
fn certificates_imply_positive_definite_hessian() {
    let mut rng = SeededRng::new(18);
    for _ in 0..20 {
        let model = random_model(&mut rng, 8, 0.5, 1.0, 1.0);
        let report = certify(&model).unwrap();
        let mut betas = Vec::new();
        if let Some(b) = report.beta_star_diag {
            betas.push(b - 2e-4);
        }
        if report.beta_star_sum.is_finite() {
            betas.push(report.beta_star_sum * (1.0 - 1e-6));
        }
        for beta in betas.into_iter().filter(|b| *b > 0.0) {
            let m = model.with_beta(beta).unwrap();
            let r = certify(&m).unwrap();
            assert!(r.is_certified());
            for _ in 0..200 {
                let q = random_point(&mut rng, 8, 0.0, 1.0);
                assert!(bethe_hessian(&m, &q).unwrap().is_positive_definite());
            }
        }
    }
}
