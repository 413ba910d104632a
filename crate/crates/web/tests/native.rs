use multidep_web::{tail_curves, tetrahedron_test, x0_curve};

#[test]
fn tail_curves_bound_the_exact_tail() {
    let c = tail_curves(&[0.5, 0.3, 0.2], 8.0, 40).unwrap();
    assert_eq!(c.x.len(), 40);
    for i in 0..40 {
        assert!(c.exact[i] >= 0.0 && c.exact[i] <= 1.0);
        if c.x[i] >= c.threshold {
            assert!(c.classical[i] >= c.exact[i] - 1e-9);
            assert!(c.variance[i] >= c.exact[i] - 1e-9);
        }
    }
    assert!(c.exact.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    // Unnormalized input is rescaled.
    let d = tail_curves(&[5.0, 3.0, 2.0], 8.0, 40).unwrap();
    assert!((d.exact[10] - c.exact[10]).abs() < 1e-12);
}

#[test]
fn tail_curves_reject_bad_input() {
    assert!(tail_curves(&[], 5.0, 10).is_err());
    assert!(tail_curves(&[1.0], -1.0, 10).is_err());
    assert!(tail_curves(&[1.0], 5.0, 1).is_err());
}

#[test]
fn x0_tail_stays_above_threshold() {
    let c = x0_curve(20).unwrap();
    assert!((c.x0[19] - 1.536404).abs() < 1e-3);
    assert!(c.tail.iter().all(|t| *t > 0.215), "{:?}", c.tail);
}

#[test]
fn tetrahedron_is_found_by_multivariance_only() {
    let r = tetrahedron_test(0.0, 200, 3).unwrap();
    assert!(r.results.iter().all(|m| m.p < 0.01), "{r:?}");
    assert!(r.pairwise.iter().all(|m| m.p > 0.01), "{r:?}");
    let json = serde_json::to_string(&r).unwrap();
    assert!(json.contains("\"pairwise_statistic\""));
    assert_eq!(r, tetrahedron_test(0.0, 200, 3).unwrap());
}
