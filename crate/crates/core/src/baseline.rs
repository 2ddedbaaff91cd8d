//! Baseline expected-utility maximization, the pricing measure Q_u and the Davis price.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::measures::{no_arbitrage_check, DiscreteMeasure, StateSpace, WassersteinOrder};
use crate::optimize::{bisect_decreasing, newton_box, Concave};
use crate::payoff::Payoff;
use crate::utility::Utility;

/// |pi*| at or below this routes to the degenerate branches.
pub const ZERO_THRESHOLD: f64 = 1e-10;
/// Unbounded action coordinates are clipped to this radius for the compatibility check.
pub const SOLVER_RADIUS: f64 = 1e3;
const GRAD_TOL: f64 = 1e-13;
const MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ActionSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(invalid("action bounds must be non-empty and of equal length"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l.is_nan() || u.is_nan() || !(l <= u)) {
            return Err(invalid("action space needs lower <= upper"));
        }
        Ok(ActionSpace { lower, upper })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn whole(dim: usize) -> Self {
        ActionSpace { lower: vec![f64::NEG_INFINITY; dim], upper: vec![f64::INFINITY; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, pi: &[f64]) -> bool {
        pi.iter().zip(self.lower.iter().zip(&self.upper)).all(|(p, (l, u))| l <= p && p <= u)
    }

    pub fn project(&self, pi: &[f64]) -> Vec<f64> {
        pi.iter().zip(self.lower.iter().zip(&self.upper)).map(|(p, (l, u))| p.clamp(*l, *u)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub model: DiscreteMeasure,
    pub utility: Utility,
    pub actions: ActionSpace,
    pub order: WassersteinOrder,
    pub payoff: Option<Payoff>,
}

impl ProblemSpec {
    pub fn new(
        model: DiscreteMeasure,
        utility: Utility,
        actions: ActionSpace,
        order: WassersteinOrder,
    ) -> Result<Self> {
        utility.validate()?;
        if actions.dim() != model.dim() {
            return Err(Error::DimensionMismatch { expected: model.dim(), got: actions.dim() });
        }
        if !no_arbitrage_check(&model) {
            return Err(Error::Arbitrage);
        }
        let spec = ProblemSpec { model, utility, actions, order, payoff: None };
        spec.compatibility_margin()?;
        Ok(spec)
    }

    pub fn with_payoff(mut self, g: Payoff) -> Result<Self> {
        g.validate()?;
        if self.model.dim() != 1 {
            return Err(invalid("payoffs are defined on one-dimensional models only"));
        }
        self.payoff = Some(g);
        Ok(self)
    }

    pub fn with_state_space(self, space: StateSpace) -> Result<Self> {
        let model = self.model.with_space(space)?;
        let ProblemSpec { utility, actions, order, payoff, .. } = self;
        let mut spec = ProblemSpec::new(model, utility, actions, order)?;
        spec.payoff = payoff;
        Ok(spec)
    }

    pub fn with_order(&self, order: WassersteinOrder) -> Self {
        ProblemSpec { order, ..self.clone() }
    }

    pub fn space(&self) -> &StateSpace {
        self.model.space()
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// Distance from the attainable wealth range to the edge of D, over the support
    /// of P and the action box clipped to the solver radius. Must be positive.
    pub fn compatibility_margin(&self) -> Result<f64> {
        let (dlo, dhi) = self.utility.domain();
        let lo: Vec<f64> = self.actions.lower.iter().map(|v| v.max(-SOLVER_RADIUS)).collect();
        let hi: Vec<f64> = self.actions.upper.iter().map(|v| v.min(SOLVER_RADIUS)).collect();
        let mut margin = f64::INFINITY;
        for (x, w) in self.model.points().zip(self.model.weights()) {
            if *w == 0.0 {
                continue;
            }
            let (mut wmin, mut wmax) = (0.0, 0.0);
            for k in 0..x.len() {
                let (a, b) = (x[k] * lo[k], x[k] * hi[k]);
                wmin += a.min(b);
                wmax += a.max(b);
            }
            margin = margin.min(wmin - dlo).min(dhi - wmax);
        }
        if margin > 0.0 {
            Ok(margin)
        } else {
            Err(Error::Incompatible(format!(
                "strategies in the action box reach wealth outside ({dlo}, {dhi})"
            )))
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// pi -> E_P[u(<X, pi> + c(X))] with optional per-atom wealth offsets.
pub(crate) struct ExpectedUtility<'a> {
    pub model: &'a DiscreteMeasure,
    pub utility: &'a Utility,
    pub offsets: Option<Vec<f64>>,
}

impl<'a> ExpectedUtility<'a> {
    pub fn new(model: &'a DiscreteMeasure, utility: &'a Utility) -> Self {
        ExpectedUtility { model, utility, offsets: None }
    }

    fn wealth(&self, i: usize, x: &[f64], pi: &[f64]) -> f64 {
        dot(x, pi) + self.offsets.as_ref().map_or(0.0, |c| c[i])
    }
}

impl Concave for ExpectedUtility<'_> {
    fn value(&self, pi: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, (x, w)) in self.model.points().zip(self.model.weights()).enumerate() {
            if *w == 0.0 {
                continue;
            }
            let v = self.utility.value(self.wealth(i, x, pi));
            if v == f64::NEG_INFINITY {
                return v;
            }
            s += w * v;
        }
        s
    }

    fn grad_hess(&self, pi: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let d = pi.len();
        let mut g = DVector::zeros(d);
        let mut h = DMatrix::zeros(d, d);
        for (i, (x, w)) in self.model.points().zip(self.model.weights()).enumerate() {
            if *w == 0.0 {
                continue;
            }
            let y = self.wealth(i, x, pi);
            let (u1, u2) = (self.utility.du(y), self.utility.d2u(y));
            for r in 0..d {
                g[r] += w * x[r] * u1;
                for c in 0..d {
                    h[(r, c)] += w * x[r] * x[c] * u2;
                }
            }
        }
        (g, h)
    }
}

pub fn expected_utility(spec: &ProblemSpec, pi: &[f64]) -> f64 {
    ExpectedUtility::new(&spec.model, &spec.utility).value(pi)
}

/// E_P[X u'] and E_P[X X^T u''] at pi.
pub fn gradient_hessian(spec: &ProblemSpec, pi: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    ExpectedUtility::new(&spec.model, &spec.utility).grad_hess(pi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineSolution {
    pub pi_star: Vec<f64>,
    pub value: f64,
    pub foc_residual: Vec<f64>,
    /// P reweighted by u'(<X, pi*>) / E_P[u'].
    pub q_u: DiscreteMeasure,
    /// E_P[X X^T u''(<X, pi*>)].
    pub hessian: DMatrix<f64>,
    pub on_boundary: bool,
    pub iterations: usize,
}

impl BaselineSolution {
    pub fn pi_norm(&self) -> f64 {
        crate::measures::euclid(&self.pi_star)
    }

    pub fn is_zero(&self) -> bool {
        self.pi_norm() <= ZERO_THRESHOLD
    }

    pub fn hessian_negative_definite(&self) -> bool {
        self.hessian.clone().symmetric_eigenvalues().iter().all(|e| *e < 0.0)
    }
}

/// Maximize pi -> E[u(<X, pi> + c)] over the action box.
pub(crate) fn maximize(
    model: &DiscreteMeasure,
    utility: &Utility,
    actions: &ActionSpace,
    offsets: Option<Vec<f64>>,
) -> Result<(Vec<f64>, f64, Vec<f64>, bool, usize)> {
    let obj = ExpectedUtility { model, utility, offsets };
    let x0 = actions.project(&vec![0.0; model.dim()]);
    if !obj.value(&x0).is_finite() {
        return Err(Error::OutsideDomain(0.0));
    }
    match newton_box(&obj, &x0, actions.lower(), actions.upper(), GRAD_TOL, MAX_ITER) {
        Ok(r) => {
            let boundary = r.active.iter().any(|a| *a);
            Ok((r.x, r.value, r.grad, boundary, r.iterations))
        }
        Err(e) if model.dim() == 1 => bisection_fallback(&obj, actions).ok_or(e),
        Err(e) => Err(e),
    }
}

fn bisection_fallback(
    obj: &ExpectedUtility,
    actions: &ActionSpace,
) -> Option<(Vec<f64>, f64, Vec<f64>, bool, usize)> {
    let feasible = |p: f64| obj.value(&[p]).is_finite();
    let grad = |p: f64| obj.grad_hess(&[p]).0[0];
    let mut lo = actions.lower()[0];
    let mut hi = actions.upper()[0];
    let shrink = |mut b: f64| {
        for _ in 0..200 {
            if b.is_finite() && feasible(b) {
                return Some(b);
            }
            b = if b.is_finite() { 0.5 * b } else { SOLVER_RADIUS.copysign(b) };
        }
        None
    };
    lo = shrink(lo)?;
    hi = shrink(hi)?;
    let p = if grad(lo) <= 0.0 {
        lo
    } else if grad(hi) >= 0.0 {
        hi
    } else {
        bisect_decreasing(grad, lo, hi, 1e-15)
    };
    let g = grad(p);
    let boundary = (p == actions.lower()[0] && g < 0.0) || (p == actions.upper()[0] && g > 0.0);
    Some((vec![p], obj.value(&[p]), vec![g], boundary, 0))
}

pub fn solve_baseline(spec: &ProblemSpec) -> Result<BaselineSolution> {
    let (pi, value, grad, on_boundary, iterations) = maximize(&spec.model, &spec.utility, &spec.actions, None)?;
    let (_, hessian) = gradient_hessian(spec, &pi);
    let q_u = marginal_utility_measure(&spec.model, &spec.utility, &pi)?;
    Ok(BaselineSolution { pi_star: pi, value, foc_residual: grad, q_u, hessian, on_boundary, iterations })
}

/// Reweight `m` by u'(<x, pi>), normalized.
pub(crate) fn marginal_utility_measure(
    m: &DiscreteMeasure,
    utility: &Utility,
    pi: &[f64],
) -> Result<DiscreteMeasure> {
    let raw: Vec<f64> = m.points().zip(m.weights()).map(|(x, w)| w * utility.du(dot(x, pi))).collect();
    let z: f64 = raw.iter().sum();
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Numerical(format!("marginal utility normalizer is {z}")));
    }
    m.with_weights(raw.iter().map(|r| r / z).collect())
}

pub fn q_u_measure(_spec: &ProblemSpec, sol: &BaselineSolution) -> Result<DiscreteMeasure> {
    if sol.on_boundary && !sol.is_zero() {
        return Err(Error::BoundaryOptimum);
    }
    Ok(sol.q_u.clone())
}

pub fn davis_price(spec: &ProblemSpec, sol: &BaselineSolution, g: &Payoff) -> Result<f64> {
    let q = q_u_measure(spec, sol)?;
    if q.dim() != 1 {
        return Err(invalid("payoffs are defined on one-dimensional models only"));
    }
    Ok(q.expect(|x| g.value(x[0])))
}

/// V(eps, p) = sup_pi E[u(-eps + <X, pi> + eps g(X) / p)] and its maximizer.
pub fn perturbed_value(spec: &ProblemSpec, g: &Payoff, price: f64, eps: f64) -> Result<(Vec<f64>, f64)> {
    let offsets: Vec<f64> = spec.model.coords().iter().map(|x| eps * (g.value(*x) / price - 1.0)).collect();
    let (pi, v, ..) = maximize(&spec.model, &spec.utility, &spec.actions, Some(offsets))?;
    Ok((pi, v))
}

const ROOT_EPS: f64 = 1e-4;

/// d/d eps V(eps, price) at eps = 0 by central differences with re-optimized strategies.
pub fn marginal_value(spec: &ProblemSpec, g: &Payoff, price: f64) -> Result<f64> {
    let (_, up) = perturbed_value(spec, g, price, ROOT_EPS)?;
    let (_, dn) = perturbed_value(spec, g, price, -ROOT_EPS)?;
    Ok((up - dn) / (2.0 * ROOT_EPS))
}

/// Davis price as the root of p -> d/d eps V(0, p).
pub fn davis_price_via_root(spec: &ProblemSpec, g: &Payoff, bracket: (f64, f64)) -> Result<f64> {
    let (a, b) = bracket;
    if spec.model.dim() != 1 {
        return Err(invalid("payoffs are defined on one-dimensional models only"));
    }
    if !(a > 0.0 && b > a) {
        return Err(invalid(format!("price bracket must satisfy 0 < a < b, got [{a}, {b}]")));
    }
    let (fa, fb) = (marginal_value(spec, g, a)?, marginal_value(spec, g, b)?);
    if fa * fb > 0.0 {
        return Err(Error::NoSignChange(a, b));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let sign = fa.signum();
    let mut failure = None;
    let root = bisect_decreasing(
        |p| match marginal_value(spec, g, p) {
            Ok(v) => sign * v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        a,
        b,
        1e-12 * b,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(root),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{make_model, ModelKind};
    use approx::assert_abs_diff_eq;

    fn binomial_log(a: f64) -> ProblemSpec {
        ProblemSpec::new(
            make_model(&ModelKind::Binomial { a }).unwrap(),
            Utility::LogShifted { w0: 1.0 },
            ActionSpace::interval(-1.0 + a, 1.0 - a).unwrap(),
            WassersteinOrder::infinite(),
        )
        .unwrap()
    }

    #[test]
    fn binomial_log_closed_form() {
        let spec = binomial_log(0.25);
        let s = solve_baseline(&spec).unwrap();
        assert_abs_diff_eq!(s.pi_star[0], 0.5, epsilon = 1e-13);
        assert_abs_diff_eq!(s.value, 0.25 * 0.5f64.ln() + 0.75 * 1.5f64.ln(), epsilon = 1e-14);
        assert!(!s.on_boundary);
        assert!(s.hessian_negative_definite());
        let q = q_u_measure(&spec, &s).unwrap();
        assert_abs_diff_eq!(q.weights()[0], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn davis_prices_binomial() {
        let spec = binomial_log(0.25);
        let s = solve_baseline(&spec).unwrap();
        assert_abs_diff_eq!(davis_price(&spec, &s, &Payoff::Power { k: 3 }).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(davis_price(&spec, &s, &Payoff::call(0.0)).unwrap(), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(davis_price(&spec, &s, &Payoff::Constant { c: 3.0 }).unwrap(), 3.0, epsilon = 1e-14);
    }

    #[test]
    fn root_matches_formula() {
        let spec = binomial_log(0.25);
        let p = davis_price_via_root(&spec, &Payoff::call(0.0), (0.1, 0.9)).unwrap();
        assert_abs_diff_eq!(p, 0.5, epsilon = 1e-5);
        let one = davis_price_via_root(&spec, &Payoff::Constant { c: 1.0 }, (0.5, 2.0)).unwrap();
        assert_abs_diff_eq!(one, 1.0, epsilon = 1e-8);
        assert!(matches!(
            davis_price_via_root(&spec, &Payoff::call(0.0), (0.6, 0.9)),
            Err(Error::NoSignChange(..))
        ));
    }

    #[test]
    fn rejects_arbitrage_and_incompatible_actions() {
        let m = DiscreteMeasure::from_scalars(&[0.5, 1.0], &[0.5, 0.5], StateSpace::whole(1)).unwrap();
        let r = ProblemSpec::new(m, Utility::Exponential { gamma: 1.0 }, ActionSpace::whole(1), WassersteinOrder::infinite());
        assert_eq!(r.unwrap_err(), Error::Arbitrage);
        let m = make_model(&ModelKind::Binomial { a: 0.25 }).unwrap();
        let r = ProblemSpec::new(m, Utility::LogShifted { w0: 1.0 }, ActionSpace::whole(1), WassersteinOrder::infinite());
        assert!(matches!(r, Err(Error::Incompatible(_))));
    }

    #[test]
    fn boundary_flag() {
        let m = make_model(&ModelKind::Binomial { a: 0.25 }).unwrap();
        let spec = ProblemSpec::new(
            m,
            Utility::LogShifted { w0: 1.0 },
            ActionSpace::interval(-0.2, 0.2).unwrap(),
            WassersteinOrder::infinite(),
        )
        .unwrap();
        let s = solve_baseline(&spec).unwrap();
        assert_eq!(s.pi_star, vec![0.2]);
        assert!(s.on_boundary);
        assert_eq!(q_u_measure(&spec, &s).unwrap_err(), Error::BoundaryOptimum);
    }

    #[test]
    fn two_dimensional_exponential() {
        // Independent coordinates decouple: each pi_k solves its own binomial problem.
        let pts = vec![vec![-1.0, -1.0], vec![-1.0, 1.0], vec![1.0, -1.0], vec![1.0, 1.0]];
        let (a, b) = (0.3, 0.4);
        let w = vec![a * b, a * (1.0 - b), (1.0 - a) * b, (1.0 - a) * (1.0 - b)];
        let m = DiscreteMeasure::new(pts, w, StateSpace::whole(2)).unwrap();
        let spec =
            ProblemSpec::new(m, Utility::Exponential { gamma: 2.0 }, ActionSpace::whole(2), WassersteinOrder::infinite())
                .unwrap();
        let s = solve_baseline(&spec).unwrap();
        assert_abs_diff_eq!(s.pi_star[0], (a / (1.0 - a)).ln() / -4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.pi_star[1], (b / (1.0 - b)).ln() / -4.0, epsilon = 1e-12);
        let mean = s.q_u.mean();
        assert!(mean.iter().all(|m| m.abs() < 1e-12));
    }
}
