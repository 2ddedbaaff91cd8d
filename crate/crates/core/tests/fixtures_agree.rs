use robustfolio::baseline::{davis_price, davis_price_via_root, q_u_measure, solve_baseline};
use robustfolio::fixtures::{fixture, fixture_by_name, FixtureSpec};
use robustfolio::measures::{StateSpace, WassersteinOrder};
use robustfolio::payoff::{Payoff, Smoothing};
use robustfolio::robust::{
    martingale_check_robust, robust_davis_first_order, robust_davis_price, robust_solve_inf,
};
use robustfolio::sensitivity::{
    davis_sensitivity, kl_value_sensitivity, optimizer_sensitivity, value_sensitivity,
};

const A_GRID: [f64; 9] = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45];

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
}

#[test]
fn binomial_baseline_and_sensitivities() {
    for a in A_GRID {
        let f = fixture(FixtureSpec::BinomialLog { a }).unwrap();
        let s = f.problem(WassersteinOrder::infinite()).unwrap();
        let b = solve_baseline(&s).unwrap();
        close(b.pi_star[0], f.pi_star(), 1e-10);
        close(b.value, f.value0(), 1e-10);
        close(value_sensitivity(&s, &b).unwrap(), -(1.0 - 2.0 * a), 1e-12);
        close(kl_value_sensitivity(&s, &b).unwrap(), f.kl_v_prime0().unwrap(), 1e-12);
        for q in [1.0, 1.5, 2.0, 2.5] {
            let s = s.with_order(WassersteinOrder::from_q(q).unwrap());
            let (dpi, _) = optimizer_sensitivity(&s, &b).unwrap();
            close(dpi[0], f.pi_prime0(q).unwrap(), 1e-10);
        }
        let fe = fixture(FixtureSpec::BinomialExp { a, gamma: 1.0 }).unwrap();
        let se = fe.problem(WassersteinOrder::infinite()).unwrap();
        let be = solve_baseline(&se).unwrap();
        close(kl_value_sensitivity(&se, &be).unwrap(), fe.kl_v_prime0().unwrap(), 1e-12);
        for q in [1.0, 1.5, 2.0, 2.5] {
            let se = se.with_order(WassersteinOrder::from_q(q).unwrap());
            close(value_sensitivity(&se, &be).unwrap(), fe.v_prime0(q).unwrap(), 1e-10);
        }
    }
}

#[test]
fn exponential_gamma_factor() {
    let f = fixture(FixtureSpec::BinomialExp { a: 0.2, gamma: 2.0 }).unwrap();
    let s = f.problem(WassersteinOrder::new(2.0).unwrap()).unwrap();
    let b = solve_baseline(&s).unwrap();
    let v = value_sensitivity(&s, &b).unwrap();
    close(v, f.v_prime0(2.0).unwrap(), 1e-10);
    close(v, 2.0 * f.v_prime0_printed(2.0).unwrap(), 1e-10);
}

#[test]
fn normal_robust_exact() {
    let f = fixture_by_name("normal_exp").unwrap();
    let s = f.problem(WassersteinOrder::infinite()).unwrap();
    let b = solve_baseline(&s).unwrap();
    let (dpi, _) = optimizer_sensitivity(&s, &b).unwrap();
    close(dpi[0], -25.0, 1e-5);
    close(value_sensitivity(&s, &b).unwrap(), f.v_prime0(1.0).unwrap(), 1e-8);
    for d in [0.0, 0.02, 0.05, 0.1] {
        let r = robust_solve_inf(&s, d).unwrap();
        close(r.value, f.value_delta_inf(d).unwrap(), 1e-5);
        close(r.pi_delta[0], f.pi_delta_inf(d).unwrap(), 1e-5);
        if d > 0.0 && d < 0.1 {
            assert!(martingale_check_robust(&s, &r).unwrap() <= 1e-6);
        }
    }
    let x2 = Payoff::Power { k: 2 };
    close(robust_davis_first_order(&s, &x2, 0.05).unwrap(), 0.04, 2e-3);
}

#[test]
fn binomial_robust_davis_curves() {
    let f = fixture_by_name("binomial_log").unwrap();
    let s = f
        .problem(WassersteinOrder::infinite())
        .unwrap()
        .with_state_space(StateSpace::interval(-2.0, 2.0).unwrap())
        .unwrap();
    for g in f.payoffs() {
        for k in 0..=6 {
            let d = 0.05 * k as f64;
            close(robust_davis_price(&s, &g, d).unwrap(), f.robust_davis_printed(&g, d).unwrap(), 1e-10);
        }
    }
    let g = Payoff::abs_shift(0.5);
    assert!(robust_davis_price(&s, &g, 0.05).unwrap() > 1.0);
    let r = robust_solve_inf(&s, 0.1).unwrap();
    assert!(martingale_check_robust(&s, &r).unwrap() <= 1e-10);
}

#[test]
fn first_order_pricing_error_is_quadratic() {
    let f = fixture_by_name("binomial_log").unwrap();
    let s = f.problem(WassersteinOrder::infinite()).unwrap();
    let g = Payoff::Power { k: 3 };
    let err = |d: f64| (robust_davis_first_order(&s, &g, d).unwrap() - f.robust_davis_printed(&g, d).unwrap()).abs();
    assert_eq!(robust_davis_first_order(&s, &g, 0.0).unwrap(), 0.0);
    assert!(err(0.1) >= 3.0 * err(0.05), "{} {}", err(0.1), err(0.05));
}

#[test]
fn davis_sensitivities() {
    let f = fixture_by_name("binomial_log").unwrap();
    let s = f.problem(WassersteinOrder::infinite()).unwrap();
    let b = solve_baseline(&s).unwrap();
    close(davis_sensitivity(&s, &b, &Payoff::Power { k: 3 }).unwrap(), -2.0, 1e-10);
    close(davis_sensitivity(&s, &b, &Payoff::call(0.0)).unwrap(), 0.0, 1e-10);

    let f = fixture_by_name("normal_exp").unwrap();
    let s = f.problem(WassersteinOrder::infinite()).unwrap();
    let b = solve_baseline(&s).unwrap();
    for g in f.payoffs() {
        let g = g.smoothed(Smoothing::Softplus { width: 0.05 });
        close(davis_sensitivity(&s, &b, &g).unwrap(), 0.0, 1e-4);
    }

    let f = fixture_by_name("lognormal_butterfly").unwrap();
    let s = f.problem(WassersteinOrder::infinite()).unwrap();
    let b = solve_baseline(&s).unwrap();
    assert!(b.is_zero());
    let g = &f.payoffs()[0];
    let h = 1e-4;
    let shifted = |d: f64| s.model.expect(|x| g.value(x[0] - d));
    let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
    close(davis_sensitivity(&s, &b, g).unwrap(), fd, 1e-3);
    // The closed form differs from the quadrature by the discretization of g'.
    close(f.davis_prime0_inf(g).unwrap(), fd, 5e-3);
}

#[test]
fn lognormal_robust_price_matches_shifted_integral() {
    let f = fixture_by_name("lognormal_butterfly").unwrap();
    let s = f.problem(WassersteinOrder::infinite()).unwrap();
    let g = &f.payoffs()[0];
    for d in [0.0, 0.05, 0.1] {
        let direct = s.model.expect(|x| g.value(x[0] - d));
        close(robust_davis_price(&s, g, d).unwrap(), direct, 2e-4);
        close(f.robust_davis_inf(g, d).unwrap(), direct, 2e-4);
    }
}

#[test]
fn envelope_root_matches_formula() {
    for name in ["binomial_log", "binomial_exp", "normal_exp"] {
        let f = fixture_by_name(name).unwrap();
        let s = f.problem(WassersteinOrder::infinite()).unwrap();
        let b = solve_baseline(&s).unwrap();
        for g in f.payoffs() {
            let g = g.smoothed(Smoothing::Softplus { width: 0.05 });
            let p = davis_price(&s, &b, &g).unwrap();
            if p <= 1e-3 {
                continue;
            }
            let r = davis_price_via_root(&s, &g, (1e-3 * p, 10.0 * p)).unwrap();
            close(r, p, 1e-5);
        }
    }
}

#[test]
fn pricing_measure_is_martingale() {
    for name in ["binomial_log", "binomial_exp", "normal_exp", "capped_exp_limit"] {
        let f = fixture_by_name(name).unwrap();
        let s = f.problem(WassersteinOrder::infinite()).unwrap();
        let b = solve_baseline(&s).unwrap();
        let q = q_u_measure(&s, &b).unwrap();
        assert!(q.mean()[0].abs() <= 1e-8, "{name}: {}", q.mean()[0]);
    }
}
