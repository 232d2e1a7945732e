use drawdown::adjustment::{solve_rho_d, solve_rho_n, solve_rho_n_of_r};
use drawdown::model::{scale, MarketParams, Severity};
use drawdown::retention::{check_r, RetentionFn};
use drawdown::simulate::{drift_identity_check, BarrierMode, Scheme, SimConfig};
use drawdown::valuefn::{psi_d, DrawdownSurface, Surface};
use proptest::prelude::*;

const EXP1: MarketParams = MarketParams {
    lambda: 1.0,
    theta: 0.1,
    eta: 0.2,
    c: 1.2,
    alpha: 0.3,
};

fn catalogue(rho_d: f64, rho_n: f64, n: f64) -> Vec<RetentionFn> {
    vec![
        RetentionFn::Full,
        RetentionFn::Proportional { q: 0.6 },
        RetentionFn::Cap { d: 1.5 },
        RetentionFn::diffusion_optimal(rho_d, &EXP1),
        RetentionFn::max_adjust(rho_n, n, &EXP1),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn retention_between_zero_and_claim(y in 0.0f64..60.0, n in 1.0f64..500.0) {
        let s = Severity::Exponential { rate: 1.0 };
        let rho_d = solve_rho_d(&EXP1, &s).unwrap();
        for r in catalogue(rho_d, 0.9 * rho_d, n) {
            let v = r.eval(y);
            prop_assert!(v >= 0.0 && v <= y, "{r:?} at {y}: {v}");
            let w = r.eval(y + 0.5);
            prop_assert!(w >= v - 1e-12, "{r:?} not monotone at {y}");
        }
    }

    #[test]
    fn scaling_keeps_kappa_and_net_premium(
        n in 1.0f64..1e4,
        lambda in 0.5f64..3.0,
        rate in 0.5f64..2.0,
    ) {
        let s = Severity::Exponential { rate };
        let p = MarketParams { lambda, ..EXP1 };
        let sp = scale(&p, &s, n).unwrap();
        prop_assert!((sp.kappa() - p.kappa(&s)).abs() <= 1e-12 * (1.0 + p.kappa(&s).abs() + p.c * n.sqrt()));
        prop_assert!((sp.net_premium() - p.net_premium(&s)).abs() <= 1e-12 * (1.0 + p.c * n.sqrt()));
        prop_assert!((sp.lambda_n * sp.mean_n - n.sqrt() * lambda * s.mean()).abs() <= 1e-12 * n.sqrt() * lambda);
    }

    #[test]
    fn surfaces_are_probabilities_nonincreasing_in_x(
        m in 0.05f64..30.0,
        t in 0.0f64..1.0,
        rho in 0.01f64..3.0,
        alpha in 0.0f64..0.95,
    ) {
        let u = DrawdownSurface::new(rho, alpha);
        let x = alpha * m + t * (1.0 - alpha) * m;
        let v = u.value(x, m);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert!(u.value(x + 0.01 * (m - x), m) <= v + 1e-15);
        prop_assert!(u.dx(x, m) <= 0.0);
        prop_assert!((u.value(alpha * m, m) - 1.0).abs() < 1e-15);
        let below = u.value(alpha * m - 0.1, m);
        prop_assert_eq!(below, 1.0);
    }

    #[test]
    fn psi_d_rises_with_the_running_maximum(x in 0.5f64..5.0, dm in 0.0f64..3.0) {
        let rho_d = solve_rho_d(&EXP1, &Severity::Exponential { rate: 1.0 }).unwrap();
        let m = x + dm;
        if EXP1.alpha * (m + 0.5) <= x {
            let a = psi_d(x, m, EXP1.alpha, rho_d).unwrap();
            let b = psi_d(x, m + 0.5, EXP1.alpha, rho_d).unwrap();
            prop_assert!(b >= a - 1e-15);
        }
    }

    #[test]
    fn check_r_is_continuous_at_its_threshold(
        rho in 0.05f64..2.0,
        n in 1.0f64..1e4,
    ) {
        let sqrt_n = n.sqrt();
        let threshold = sqrt_n / rho * (EXP1.theta / sqrt_n).ln_1p();
        let eps = 1e-7 * (1.0 + threshold);
        let lo = check_r(threshold - eps, rho, sqrt_n, EXP1.theta, EXP1.eta);
        let hi = check_r(threshold + eps, rho, sqrt_n, EXP1.theta, EXP1.eta);
        prop_assert!((hi - lo).abs() < 4.0 * eps, "{lo} {hi}");
        // above the threshold the root leaves a positive ceded part
        let y = threshold + 1.0;
        let r = check_r(y, rho, sqrt_n, EXP1.theta, EXP1.eta);
        prop_assert!(r < y && r >= threshold);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn no_retention_beats_the_maximal_coefficient(n in 1.0f64..300.0, q in 0.45f64..1.0, d in 0.8f64..6.0) {
        let s = Severity::Exponential { rate: 1.0 };
        let rho_n = solve_rho_n(n, &EXP1, &s).unwrap();
        let rho_d = solve_rho_d(&EXP1, &s).unwrap();
        prop_assert!(rho_n < rho_d);
        for r in [
            RetentionFn::Proportional { q },
            RetentionFn::Cap { d },
            RetentionFn::diffusion_optimal(rho_d, &EXP1),
        ] {
            if let Ok(v) = solve_rho_n_of_r(&r, n, &EXP1, &s) {
                prop_assert!(v <= rho_n * (1.0 + 1e-10), "{r:?}: {v} > {rho_n}");
            }
        }
    }

    #[test]
    fn net_drift_is_scale_invariant(n in 1.0f64..1e4, d in 0.8f64..6.0) {
        let s = Severity::Exponential { rate: 1.0 };
        let cfg = SimConfig {
            n,
            retention: RetentionFn::Cap { d },
            x0: 2.0,
            m0: 2.0,
            barrier_mult: 8.0,
            paths: 1,
            seed: 0,
            mode: BarrierMode::Drawdown,
            scheme: Scheme::JumpExact,
        };
        let rep = drift_identity_check(&cfg, &EXP1, &s).unwrap();
        prop_assert!(rep.identity_error <= 1e-12 * (1.0 + rep.drift_n));
    }
}
