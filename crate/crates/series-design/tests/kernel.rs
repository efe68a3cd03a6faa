//! Covariance-kernel contracts: factorization structure, the induced time
//! change, and validation diagnostics.

use series_design::kernel::{CaseTag, TriangularKernel, DEFAULT_ZERO_TOL};

#[test]
fn exponential_covariance_depends_on_distance_only() {
    let kernel = TriangularKernel::exponential(2.5).unwrap();
    for (s, t) in [(0.1, 0.4), (0.0, 1.0), (0.7, 0.7)] {
        let want = (-2.5 * (t - s) as f64).exp();
        let got = kernel.covariance(s, t).unwrap();
        assert!((got - want).abs() < 1e-14, "K({s},{t}) = {got}, want {want}");
    }
}

#[test]
fn covariance_is_symmetric() {
    for kernel in [TriangularKernel::exponential(1.7).unwrap(), TriangularKernel::brownian()] {
        for (s, t) in [(0.05, 0.95), (0.3, 0.31), (0.5, 0.2), (1.0, 0.0)] {
            let a = kernel.covariance(s, t).unwrap();
            let b = kernel.covariance(t, s).unwrap();
            assert_eq!(a.to_bits(), b.to_bits(), "K({s},{t}) ≠ K({t},{s}) for {}", kernel.name);
        }
    }
}

#[test]
fn markov_factorization_holds() {
    // For s ≤ t ≤ r: K(s,r) K(t,t) = K(s,t) K(t,r).
    for kernel in [
        TriangularKernel::exponential(0.5).unwrap(),
        TriangularKernel::exponential(5.0).unwrap(),
        TriangularKernel::brownian(),
    ] {
        for &(s, t, r) in &[(0.1, 0.3, 0.8), (0.0, 0.5, 1.0), (0.2, 0.2, 0.9), (0.4, 0.9, 0.95)] {
            let lhs = kernel.covariance(s, r).unwrap() * kernel.covariance(t, t).unwrap();
            let rhs = kernel.covariance(s, t).unwrap() * kernel.covariance(t, r).unwrap();
            assert!(
                (lhs - rhs).abs() < 1e-12,
                "factorization violated for {} at ({s},{t},{r}): {lhs} vs {rhs}",
                kernel.name
            );
        }
    }
}

#[test]
fn time_change_matches_variance_ratio() {
    // q(t) = K(t,t) / v(t)².
    for kernel in [TriangularKernel::exponential(3.0).unwrap(), TriangularKernel::brownian()] {
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            let var = kernel.covariance(t, t).unwrap();
            let want = var / (kernel.v(t) * kernel.v(t));
            assert!(
                (kernel.q(t) - want).abs() < 1e-12,
                "q({t}) mismatch for {}",
                kernel.name
            );
        }
    }
}

#[test]
fn time_change_derivative_matches_finite_differences() {
    let kernel = TriangularKernel::exponential(2.0).unwrap();
    let h = 1e-6;
    for &t in &[0.1, 0.5, 0.9] {
        let fd = (kernel.q(t + h) - kernel.q(t - h)) / (2.0 * h);
        assert!((kernel.dq(t) - fd).abs() / fd.abs() < 1e-8, "dq({t})");
        let fd2 = (kernel.dq(t + h) - kernel.dq(t - h)) / (2.0 * h);
        assert!((kernel.ddq(t) - fd2).abs() / fd2.abs().max(1.0) < 1e-6, "ddq({t})");
    }
}

#[test]
fn domain_is_unit_interval() {
    let kernel = TriangularKernel::exponential(1.0).unwrap();
    assert!(kernel.covariance(1.5, 0.5).is_err());
    assert!(kernel.covariance(0.5, -0.1).is_err());
    assert!(kernel.covariance(0.0, 1.0).is_ok());
}

#[test]
fn invalid_rates_are_rejected() {
    assert!(TriangularKernel::exponential(0.0).is_err());
    assert!(TriangularKernel::exponential(-1.0).is_err());
    assert!(TriangularKernel::exponential(f64::NAN).is_err());
    assert!(TriangularKernel::exponential(f64::INFINITY).is_err());
}

#[test]
fn validation_passes_for_builtin_kernels() {
    let report = TriangularKernel::exponential(1.0).unwrap().validate(64).unwrap();
    assert!(report.ok, "violations: {:?}", report.violations);

    let report = TriangularKernel::brownian().validate(64).unwrap();
    assert!(report.ok, "violations: {:?}", report.violations);
    assert!(
        report.notes.iter().any(|n| n.contains("zero-variance at t=0")),
        "expected a degeneracy note, got {:?}",
        report.notes
    );
}

#[test]
fn validation_flags_decreasing_time_change() {
    let kernel = TriangularKernel::custom(
        "decreasing",
        vec![],
        |t: f64| -t,
        |_| -1.0,
        |_| 0.0,
        |_| 1.0,
        |_| 0.0,
        |_| 0.0,
    );
    let report = kernel.validate(32).unwrap();
    assert!(!report.ok);
    assert!(
        report.violations.iter().any(|v| v.contains("q not increasing")),
        "violations: {:?}",
        report.violations
    );
}

#[test]
fn case_classification_follows_origin_behavior() {
    let exp = TriangularKernel::exponential(1.0).unwrap();
    let brownian = TriangularKernel::brownian();
    // Noise at the origin: always case A.
    assert_eq!(exp.case_tag(0.0, DEFAULT_ZERO_TOL), CaseTag::A);
    assert_eq!(exp.case_tag(1.0, DEFAULT_ZERO_TOL), CaseTag::A);
    // Noiseless origin: case depends on whether f vanishes there.
    assert_eq!(brownian.case_tag(0.0, DEFAULT_ZERO_TOL), CaseTag::B);
    assert_eq!(brownian.case_tag(1.0, DEFAULT_ZERO_TOL), CaseTag::C);
    assert_eq!(brownian.case_tag(1e-12, DEFAULT_ZERO_TOL), CaseTag::B);
}

#[test]
fn brownian_time_change_is_identity() {
    let kernel = TriangularKernel::brownian();
    for i in 0..=8 {
        let t = i as f64 / 8.0;
        assert!((kernel.q(t) - t).abs() < 1e-15);
        assert!((kernel.dq(t) - 1.0).abs() < 1e-15);
    }
}
