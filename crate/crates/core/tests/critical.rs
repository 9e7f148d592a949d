//! Square-box bisection: duality of the pseudo-critical brackets.

use ersa::critical_surface::{bisect_lambda_c, dual_product_consistent, monotonicity_violations, trace_surface, BisectConfig};

fn square() -> BisectConfig {
    BisectConfig {
        rho: 1.0,
        lambda_lo: 0.1,
        lambda_hi: 10.0,
        tol: 0.1,
        ..BisectConfig::default()
    }
}

#[test]
fn self_dual_point_brackets_one() {
    let r = bisect_lambda_c(0.5, 12, &square(), 5).unwrap();
    assert!(r.contains(1.0), "{r:?}");
}

#[test]
fn dual_pairs_multiply_to_one() {
    let cfg = square();
    for p in [0.3, 0.4] {
        let a = bisect_lambda_c(p, 12, &cfg, 6).unwrap();
        let b = bisect_lambda_c(1.0 - p, 12, &cfg, 6).unwrap();
        assert!(a.lambda_hi >= b.lambda_hi && a.lambda_lo >= b.lambda_lo, "p={p}: {a:?} {b:?}");
        assert!(dual_product_consistent(&a, &b), "p={p}: {a:?} {b:?}");
    }
}

#[test]
fn surface_is_monotone() {
    let rows = trace_surface(&[0.2, 0.4, 0.6, 0.8], 10, &square(), 7).unwrap();
    assert!(rows.iter().all(|r| r.error.is_none()));
    assert!(monotonicity_violations(&rows).is_empty());
}
