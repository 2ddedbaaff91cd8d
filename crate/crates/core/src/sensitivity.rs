//! First-order sensitivities in the Wasserstein radius at delta = 0.

use std::cmp::Ordering;

use nalgebra::DVector;

use crate::baseline::{dot, BaselineSolution, ProblemSpec};
use crate::error::{invalid, Error, Result};
use crate::measures::{euclid, DiscreteMeasure, MeasureKind, WassersteinOrder};
use crate::payoff::Payoff;
use crate::utility::Utility;

/// Capped exponentials with kappa below this count as exponential for the growth guard.
pub const KAPPA_FLOOR: f64 = 1e-4;
/// State spaces wider than this count as unbounded for the growth guard.
pub const DIAMETER_CAP: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Interior,
    PiStarZero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub q: f64,
    pub pi_star: Vec<f64>,
    pub value0: f64,
    pub v_prime0: f64,
    /// Absent on the pi* = 0 branch.
    pub pi_prime0: Option<Vec<f64>>,
    pub kappa_u: Option<f64>,
    pub davis_price: Option<f64>,
    pub davis_prime0: Option<f64>,
    pub branch: Branch,
    /// Only for genuinely discrete models.
    pub kl_v_prime0: Option<f64>,
}

/// Reject exponential-type utilities with finite p on (effectively) unbounded state spaces,
/// where the value sensitivity is -inf.
pub fn growth_guard(spec: &ProblemSpec) -> Result<()> {
    let space = spec.space();
    let wide = !space.is_bounded() || space.diameter() > DIAMETER_CAP;
    if !spec.order.is_infinite() && spec.utility.exponential_tails(KAPPA_FLOOR) && wide {
        return Err(Error::Degenerate(format!(
            "exponential utility with finite p = {} on a state space of diameter {}: \
             the ball admits tail mass that drives V'(0) to -inf",
            spec.order.p(),
            space.diameter()
        )));
    }
    Ok(())
}

fn wealth(x: &[f64], pi: &[f64]) -> f64 {
    dot(x, pi)
}

/// (E_P |u'(<X, pi>)|^q)^(1/q).
pub(crate) fn marginal_norm(model: &DiscreteMeasure, u: &Utility, pi: &[f64], q: f64) -> f64 {
    if q == 1.0 {
        return model.expect(|x| u.du(wealth(x, pi)).abs());
    }
    model.expect(|x| u.du(wealth(x, pi)).abs().powf(q)).powf(1.0 / q)
}

fn require_interior(sol: &BaselineSolution) -> Result<()> {
    if sol.is_zero() {
        return Err(Error::ZeroOptimizer);
    }
    if sol.on_boundary {
        return Err(Error::BoundaryOptimum);
    }
    Ok(())
}

pub fn value_sensitivity(spec: &ProblemSpec, sol: &BaselineSolution) -> Result<f64> {
    if sol.is_zero() {
        return Ok(0.0);
    }
    require_interior(sol)?;
    growth_guard(spec)?;
    let n = marginal_norm(&spec.model, &spec.utility, &sol.pi_star, spec.order.q());
    Ok(-n * sol.pi_norm())
}

/// Returns (pi*'(0), kappa_u).
pub fn optimizer_sensitivity(spec: &ProblemSpec, sol: &BaselineSolution) -> Result<(Vec<f64>, f64)> {
    require_interior(sol)?;
    growth_guard(spec)?;
    if !sol.hessian_negative_definite() {
        return Err(Error::IndefiniteHessian);
    }
    let (u, q, pi) = (&spec.utility, spec.order.q(), &sol.pi_star);
    let norm = marginal_norm(&spec.model, u, pi, q);
    let inner = spec.model.expect(|x| {
        let w = wealth(x, pi);
        let du = u.du(w);
        (w * u.d2u(w) + du) * du.abs().powf(q - 1.0)
    });
    let kappa = norm.powf(1.0 - q) * inner;
    let dir = DVector::from_iterator(pi.len(), pi.iter().map(|p| p / sol.pi_norm() * kappa));
    let step = sol.hessian.clone().lu().solve(&dir).ok_or(Error::IndefiniteHessian)?;
    Ok((step.iter().copied().collect(), kappa))
}

pub fn transport_direction(spec: &ProblemSpec, sol: &BaselineSolution, x: &[f64]) -> Result<Vec<f64>> {
    if sol.is_zero() {
        return Err(Error::ZeroOptimizer);
    }
    if x.len() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), got: x.len() });
    }
    Ok(transport_with(spec, &sol.pi_star, x))
}

fn transport_with(spec: &ProblemSpec, pi: &[f64], x: &[f64]) -> Vec<f64> {
    let q = spec.order.q();
    let norm = euclid(pi);
    let scale = if q == 1.0 {
        1.0
    } else {
        let m = spec.model.expect(|y| spec.utility.du(wealth(y, pi)).abs().powf(q));
        spec.utility.du(wealth(x, pi)).abs().powf(q - 1.0) * m.powf(1.0 / q - 1.0)
    };
    pi.iter().map(|p| p / norm * scale).collect()
}

pub fn davis_sensitivity(spec: &ProblemSpec, sol: &BaselineSolution, g: &Payoff) -> Result<f64> {
    if spec.dim() != 1 {
        return Err(invalid("payoffs are defined on one-dimensional models only"));
    }
    let q = spec.order.q();
    if sol.is_zero() {
        let m = if q == 1.0 {
            spec.model.expect(|x| g.grad(x[0]).abs())
        } else {
            spec.model.expect(|x| g.grad(x[0]).abs().powf(q)).powf(1.0 / q)
        };
        return Ok(-m);
    }
    let (pi_prime, _) = optimizer_sensitivity(spec, sol)?;
    let (u, pi) = (&spec.utility, sol.pi_star[0]);
    let qu = &sol.q_u;
    let price = qu.expect(|x| g.value(x[0]));
    Ok(qu.expect(|x| {
        let t = transport_with(spec, &sol.pi_star, x)[0];
        let w = x[0] * pi;
        let r = -u.d2u(w) / u.du(w);
        r * (t * pi - x[0] * pi_prime[0]) * (g.value(x[0]) - price) - g.grad(x[0]) * t
    }))
}

/// Relative-entropy comparator -sqrt(2 Var_P(u(<X, pi*>))).
pub fn kl_value_sensitivity(spec: &ProblemSpec, sol: &BaselineSolution) -> Result<f64> {
    if spec.model.kind() == MeasureKind::Quadrature {
        return Err(Error::Degenerate(
            "the relative-entropy comparator is only defined here for genuinely discrete models".into(),
        ));
    }
    let u = |x: &[f64]| spec.utility.value(wealth(x, &sol.pi_star));
    let m = spec.model.expect(u);
    let var = spec.model.expect(|x| (u(x) - m).powi(2));
    if !var.is_finite() {
        return Err(Error::Numerical("utility variance is not finite".into()));
    }
    Ok(-(2.0 * var).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceOutcome {
    pub score: f64,
    pub score_alt: f64,
    /// Ordering of the first model relative to the alternative.
    pub ordering: Ordering,
}

/// First-order robust score E[u(<X, pi>)] - delta |pi| ||u'||_q under each model.
pub fn preference_compare(
    p: &DiscreteMeasure,
    alt: &DiscreteMeasure,
    pi: &[f64],
    utility: &Utility,
    order: WassersteinOrder,
    delta: f64,
) -> Result<PreferenceOutcome> {
    if !(delta >= 0.0) {
        return Err(invalid(format!("delta must be nonnegative, got {delta}")));
    }
    if p.dim() != pi.len() || alt.dim() != pi.len() {
        return Err(Error::DimensionMismatch { expected: pi.len(), got: p.dim().max(alt.dim()) });
    }
    let score = |m: &DiscreteMeasure| {
        let eu = m.expect(|x| utility.value(wealth(x, pi)));
        if delta == 0.0 {
            eu
        } else {
            eu - delta * euclid(pi) * marginal_norm(m, utility, pi, order.q())
        }
    };
    let (a, b) = (score(p), score(alt));
    let ordering = a.partial_cmp(&b).ok_or_else(|| Error::Numerical("score is NaN".into()))?;
    Ok(PreferenceOutcome { score: a, score_alt: b, ordering })
}

pub fn sensitivity_report(
    spec: &ProblemSpec,
    sol: &BaselineSolution,
    g: Option<&Payoff>,
) -> Result<SensitivityReport> {
    let branch = if sol.is_zero() { Branch::PiStarZero } else { Branch::Interior };
    let v_prime0 = value_sensitivity(spec, sol)?;
    let (pi_prime0, kappa_u) = match branch {
        Branch::Interior => {
            let (d, k) = optimizer_sensitivity(spec, sol)?;
            (Some(d), Some(k))
        }
        Branch::PiStarZero => (None, None),
    };
    let (davis_price, davis_prime0) = match g {
        Some(g) => (
            Some(crate::baseline::davis_price(spec, sol, g)?),
            Some(davis_sensitivity(spec, sol, g)?),
        ),
        None => (None, None),
    };
    let kl_v_prime0 = match spec.model.kind() {
        MeasureKind::Exact => Some(kl_value_sensitivity(spec, sol)?),
        MeasureKind::Quadrature => None,
    };
    Ok(SensitivityReport {
        q: spec.order.q(),
        pi_star: sol.pi_star.clone(),
        value0: sol.value,
        v_prime0,
        pi_prime0,
        kappa_u,
        davis_price,
        davis_prime0,
        branch,
        kl_v_prime0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::{solve_baseline, ActionSpace};
    use crate::measures::{make_model, ModelKind, StateSpace};
    use approx::assert_abs_diff_eq;

    fn spec(a: f64, u: Utility, p: f64) -> ProblemSpec {
        let actions = match u {
            Utility::LogShifted { .. } => ActionSpace::interval(-1.0 + a, 1.0 - a).unwrap(),
            _ => ActionSpace::whole(1),
        };
        ProblemSpec::new(
            make_model(&ModelKind::Binomial { a }).unwrap(),
            u,
            actions,
            WassersteinOrder::new(p).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn binomial_log_inf() {
        let s = spec(0.25, Utility::LogShifted { w0: 1.0 }, f64::INFINITY);
        let sol = solve_baseline(&s).unwrap();
        assert_abs_diff_eq!(value_sensitivity(&s, &sol).unwrap(), -0.5, epsilon = 1e-13);
        let (d, k) = optimizer_sensitivity(&s, &sol).unwrap();
        assert_abs_diff_eq!(d[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(k, 4.0 / 3.0, epsilon = 1e-12);
        assert_eq!(transport_direction(&s, &sol, &[0.3]).unwrap(), vec![1.0]);
        assert_abs_diff_eq!(davis_sensitivity(&s, &sol, &Payoff::Power { k: 3 }).unwrap(), -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(davis_sensitivity(&s, &sol, &Payoff::call(0.0)).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn binomial_log_q2() {
        let s = spec(0.25, Utility::LogShifted { w0: 1.0 }, 2.0);
        let sol = solve_baseline(&s).unwrap();
        let t = |x: f64| transport_direction(&s, &sol, &[x]).unwrap()[0];
        assert_abs_diff_eq!(t(-1.0), 2.0 / (4.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(t(1.0), (2.0 / 3.0) / (4.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        let (d, _) = optimizer_sensitivity(&s, &sol).unwrap();
        assert_abs_diff_eq!(d[0], -1.4433756729740645, epsilon = 1e-10);
        // -<E[u' T], pi*> equals V'(0)
        let eut = s.model.expect(|x| s.utility.du(x[0] * sol.pi_star[0]) * t(x[0]));
        assert_abs_diff_eq!(-eut * sol.pi_star[0], value_sensitivity(&s, &sol).unwrap(), epsilon = 1e-13);
    }

    #[test]
    fn binomial_exponential_q2() {
        let s = spec(0.25, Utility::Exponential { gamma: 1.0 }, 2.0);
        let sol = solve_baseline(&s).unwrap();
        assert_abs_diff_eq!(value_sensitivity(&s, &sol).unwrap(), -0.5493061443340549, epsilon = 1e-12);
        assert_abs_diff_eq!(kl_value_sensitivity(&s, &sol).unwrap(), -(0.5f64).sqrt(), epsilon = 1e-13);
    }

    #[test]
    fn zero_branch() {
        let m = make_model(&ModelKind::Binomial { a: 0.5 }).unwrap();
        let s = ProblemSpec::new(m, Utility::Exponential { gamma: 1.0 }, ActionSpace::whole(1), WassersteinOrder::new(2.0).unwrap())
            .unwrap();
        let sol = solve_baseline(&s).unwrap();
        assert!(sol.is_zero());
        assert_eq!(value_sensitivity(&s, &sol).unwrap(), 0.0);
        assert_eq!(optimizer_sensitivity(&s, &sol).unwrap_err(), Error::ZeroOptimizer);
        let g = Payoff::Power { k: 2 };
        let expect = -(0.5f64 * 4.0 + 0.5 * 4.0).sqrt();
        assert_abs_diff_eq!(davis_sensitivity(&s, &sol, &g).unwrap(), expect, epsilon = 1e-14);
        assert_eq!(kl_value_sensitivity(&s, &sol).unwrap(), 0.0);
        let rep = sensitivity_report(&s, &sol, Some(&g)).unwrap();
        assert_eq!(rep.branch, Branch::PiStarZero);
    }

    #[test]
    fn guard_and_quadrature_rejection() {
        let m = make_model(&ModelKind::Normal { mu: 0.1, sigma: 0.2, n_nodes: 64 }).unwrap();
        let s = ProblemSpec::new(m, Utility::Exponential { gamma: 1.0 }, ActionSpace::whole(1), WassersteinOrder::new(2.0).unwrap())
            .unwrap();
        let sol = solve_baseline(&s).unwrap();
        assert!(matches!(value_sensitivity(&s, &sol), Err(Error::Degenerate(_))));
        let s2 = s.with_order(WassersteinOrder::infinite());
        assert!(value_sensitivity(&s2, &sol).is_ok());
        assert!(matches!(kl_value_sensitivity(&s2, &sol), Err(Error::Degenerate(_))));
        let bounded = s.clone().with_state_space(StateSpace::interval(-10.0, 10.0).unwrap()).unwrap();
        assert!(value_sensitivity(&bounded, &sol).is_ok());
    }

    #[test]
    fn preference_basics() {
        let p = make_model(&ModelKind::Binomial { a: 0.2 }).unwrap();
        let alt = make_model(&ModelKind::Binomial { a: 0.3 }).unwrap();
        let u = Utility::LogShifted { w0: 1.0 };
        let o = WassersteinOrder::infinite();
        let same = preference_compare(&p, &p, &[0.4], &u, o, 0.05).unwrap();
        assert_eq!(same.ordering, Ordering::Equal);
        let r = preference_compare(&p, &alt, &[0.4], &u, o, 0.05).unwrap();
        let eu = |a: f64| a * 0.6f64.ln() + (1.0 - a) * 1.4f64.ln();
        let nrm = |a: f64| a / 0.6 + (1.0 - a) / 1.4;
        assert_abs_diff_eq!(r.score, eu(0.2) - 0.05 * 0.4 * nrm(0.2), epsilon = 1e-15);
        assert_abs_diff_eq!(r.score_alt, eu(0.3) - 0.05 * 0.4 * nrm(0.3), epsilon = 1e-15);
        assert_eq!(r.ordering, Ordering::Greater);
        let z = preference_compare(&p, &alt, &[0.4], &u, o, 0.0).unwrap();
        assert_eq!(z.score, eu(0.2));
    }
}
