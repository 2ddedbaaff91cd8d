use proptest::prelude::*;

use robustfolio::baseline::{
    davis_price, expected_utility, gradient_hessian, q_u_measure, solve_baseline, ActionSpace, ProblemSpec,
};
use robustfolio::measures::{
    make_model, translate, wasserstein_distance, ClipMode, DiscreteMeasure, ModelKind, StateSpace,
    WassersteinOrder,
};
use robustfolio::payoff::Payoff;
use robustfolio::robust::{martingale_check_robust, robust_solve_inf};
use robustfolio::utility::Utility;

fn measure(max_atoms: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec((-3.0f64..3.0, 0.05f64..1.0), 1..=max_atoms).prop_map(|v| {
        let xs: Vec<f64> = v.iter().map(|p| p.0).collect();
        let total: f64 = v.iter().map(|p| p.1).sum();
        let ws: Vec<f64> = v.iter().map(|p| p.1 / total).collect();
        DiscreteMeasure::from_scalars(&xs, &ws, StateSpace::whole(1)).unwrap()
    })
}

fn measure_2d() -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec(((-2.0f64..2.0, -2.0f64..2.0), 0.05f64..1.0), 1..=5).prop_map(|v| {
        let pts: Vec<Vec<f64>> = v.iter().map(|p| vec![p.0 .0, p.0 .1]).collect();
        let total: f64 = v.iter().map(|p| p.1).sum();
        let ws: Vec<f64> = v.iter().map(|p| p.1 / total).collect();
        DiscreteMeasure::new(pts, ws, StateSpace::whole(2)).unwrap()
    })
}

fn order() -> impl Strategy<Value = WassersteinOrder> {
    prop_oneof![
        Just(WassersteinOrder::new(1.5).unwrap()),
        Just(WassersteinOrder::new(2.0).unwrap()),
        Just(WassersteinOrder::new(4.0).unwrap()),
        Just(WassersteinOrder::infinite()),
    ]
}

/// Two-sided model with both signs present, so the baseline problem is well posed.
fn market() -> impl Strategy<Value = DiscreteMeasure> {
    (prop::collection::vec((0.05f64..0.9, 0.05f64..1.0), 1..=3), prop::collection::vec((0.05f64..0.9, 0.05f64..1.0), 1..=3))
        .prop_map(|(neg, pos)| {
            let mut xs: Vec<f64> = neg.iter().map(|p| -p.0).collect();
            xs.extend(pos.iter().map(|p| p.0));
            let mut ws: Vec<f64> = neg.iter().map(|p| p.1).collect();
            ws.extend(pos.iter().map(|p| p.1));
            let total: f64 = ws.iter().sum();
            let ws: Vec<f64> = ws.iter().map(|w| w / total).collect();
            DiscreteMeasure::from_scalars(&xs, &ws, StateSpace::interval(-3.0, 3.0).unwrap()).unwrap()
        })
}

fn log_spec(m: DiscreteMeasure) -> ProblemSpec {
    ProblemSpec::new(
        m,
        Utility::LogShifted { w0: 1.0 },
        ActionSpace::interval(-0.9, 0.9).unwrap(),
        WassersteinOrder::infinite(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_axioms(a in measure(6), b in measure(6), c in measure(6), o in order()) {
        let ab = wasserstein_distance(&a, &b, o).unwrap();
        let ba = wasserstein_distance(&b, &a, o).unwrap();
        let ac = wasserstein_distance(&a, &c, o).unwrap();
        let cb = wasserstein_distance(&c, &b, o).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-12 * (1.0 + ab));
        prop_assert!(ab <= ac + cb + 1e-10);
        prop_assert!(wasserstein_distance(&a, &a, o).unwrap() <= 1e-12);
    }

    #[test]
    fn metric_axioms_2d(a in measure_2d(), b in measure_2d(), c in measure_2d()) {
        let o = WassersteinOrder::new(2.0).unwrap();
        let ab = wasserstein_distance(&a, &b, o).unwrap();
        let ba = wasserstein_distance(&b, &a, o).unwrap();
        let ac = wasserstein_distance(&a, &c, o).unwrap();
        let cb = wasserstein_distance(&c, &b, o).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-7 * (1.0 + ab));
        prop_assert!(ab <= ac + cb + 1e-7);
        prop_assert!(wasserstein_distance(&a, &a, o).unwrap() <= 1e-7);
    }

    #[test]
    fn nondecreasing_in_p(a in measure(6), b in measure(6)) {
        let mut prev = 0.0;
        for p in [1.5, 2.0, 4.0, f64::INFINITY] {
            let o = if p.is_infinite() { WassersteinOrder::infinite() } else { WassersteinOrder::new(p).unwrap() };
            let w = wasserstein_distance(&a, &b, o).unwrap();
            prop_assert!(w >= prev - 1e-12 * (1.0 + w));
            prev = w;
        }
    }

    #[test]
    fn translation_distance(a in measure(6), c in -2.0f64..2.0, o in order()) {
        let t = translate(&a, &[c], ClipMode::Error).unwrap();
        let w = wasserstein_distance(&a, &t, o).unwrap();
        prop_assert!((w - c.abs()).abs() <= 1e-10);
    }

    #[test]
    fn davis_price_is_linear(m in market(), s in -2.0f64..2.0, k in -1.0f64..1.0) {
        let spec = log_spec(m);
        let b = solve_baseline(&spec).unwrap();
        prop_assume!(!b.on_boundary);
        let (g1, g2) = (Payoff::Power { k: 3 }, Payoff::call(k));
        let combo = Payoff::Linear { terms: vec![(s, g1.clone()), (1.0, g2.clone())] };
        let lhs = davis_price(&spec, &b, &combo).unwrap();
        let rhs = s * davis_price(&spec, &b, &g1).unwrap() + davis_price(&spec, &b, &g2).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn pricing_measures_are_martingales(m in market(), d in 0.0f64..0.03) {
        let spec = log_spec(m);
        let b = solve_baseline(&spec).unwrap();
        prop_assume!(!b.on_boundary && !b.is_zero());
        let q = q_u_measure(&spec, &b).unwrap();
        prop_assert!(q.mean()[0].abs() <= 1e-8);
        let r = robust_solve_inf(&spec, d).unwrap();
        prop_assume!(r.pi_delta[0].abs() > 1e-6 && r.pi_delta[0].abs() < 0.9 - 1e-9);
        prop_assert!(martingale_check_robust(&spec, &r).unwrap() <= 1e-8);
    }

    #[test]
    fn robust_value_nonincreasing(m in market()) {
        let spec = log_spec(m);
        let mut prev = f64::INFINITY;
        for k in 0..8 {
            let r = robust_solve_inf(&spec, 0.01 * k as f64).unwrap();
            prop_assert!(r.value <= prev + 1e-12);
            prev = r.value;
        }
    }

    #[test]
    fn hessian_matches_finite_differences(m in market(), pi in -0.5f64..0.5) {
        let spec = log_spec(m);
        let h = 1e-4;
        let (g, hess) = gradient_hessian(&spec, &[pi]);
        let gp = gradient_hessian(&spec, &[pi + h]).0[0];
        let gm = gradient_hessian(&spec, &[pi - h]).0[0];
        let fd = (gp - gm) / (2.0 * h);
        prop_assert!((fd - hess[(0, 0)]).abs() <= 1e-4 * hess[(0, 0)].abs().max(1e-12));
        let fdg = (expected_utility(&spec, &[pi + h]) - expected_utility(&spec, &[pi - h])) / (2.0 * h);
        prop_assert!((fdg - g[0]).abs() <= 1e-4 * g[0].abs().max(1e-6));
    }
}

#[test]
fn normal_low_moments_exact() {
    let err = |n| {
        let m = make_model(&ModelKind::Normal { mu: 0.1, sigma: 0.2, n_nodes: n }).unwrap();
        let mean = m.mean()[0];
        (m.expect(|x| (x[0] - mean).powi(4)) - 3.0 * 0.2f64.powi(4)).abs()
    };
    // Gauss-Hermite is exact for low moments; the check is that it stays so.
    assert!(err(32) <= 1e-14 && err(64) <= 1e-14);
}
