//! Robust value, optimizer, adversarial measure and robust Davis price.
//!
//! For p = inf the inner problem reduces to a deterministic shift of every atom.
//! For finite p in d = 1 the inner infimum over the ball is computed by a
//! Lagrangian relaxation over transport kernels, which is exact up to the grid
//! search used for the per-atom minimizations.

use rayon::prelude::*;

use crate::baseline::{dot, maximize, solve_baseline, ActionSpace, ProblemSpec, ZERO_THRESHOLD};
use crate::error::{invalid, Error, Result};
use crate::measures::{
    euclid, pushforward, translate, wasserstein_distance, ClipMode, DiscreteMeasure, StateSpace,
    WassersteinOrder,
};
use crate::optimize::{golden_max, golden_min, Concave};
use crate::payoff::Payoff;
use crate::sensitivity::{growth_guard, optimizer_sensitivity, transport_direction};
use crate::utility::Utility;

/// Largest baseline model accepted by the finite-p oracle.
pub const ORACLE_ATOM_CAP: usize = 16;
const OUTER_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RobustMethod {
    InfExact,
    FinitePOracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustSolution {
    pub delta: f64,
    pub value: f64,
    pub pi_delta: Vec<f64>,
    pub adversary: DiscreteMeasure,
    /// W_p(P, adversary).
    pub transport_cost: f64,
    pub robust_davis: Option<f64>,
    pub method: RobustMethod,
    /// Primal minus dual value of the inner problem at pi_delta (finite p only).
    pub duality_gap: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Fragments an atom may be split into, 2 to 4. The Lagrangian construction
    /// never needs more than two.
    pub fragments: usize,
    /// Grid points per side of each atom's displacement search.
    pub grid: usize,
    pub bisection_steps: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { fragments: 2, grid: 200, bisection_steps: 90 }
    }
}

impl OracleOptions {
    fn validate(&self) -> Result<()> {
        if !(2..=4).contains(&self.fragments) {
            return Err(invalid(format!("fragments must be 2..=4, got {}", self.fragments)));
        }
        if self.grid < 10 || self.bisection_steps < 20 {
            return Err(invalid("oracle grid and bisection budgets are too small"));
        }
        Ok(())
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(invalid(format!("delta must be finite and nonnegative, got {delta}")));
    }
    Ok(())
}

fn unbounded(m: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    m.with_space(StateSpace::whole(m.dim()))
}

/// pi -> E_P[u(<X, pi> - delta |pi|)] for d > 1.
struct ShiftedObjective<'a> {
    model: &'a DiscreteMeasure,
    utility: &'a Utility,
    delta: f64,
}

impl Concave for ShiftedObjective<'_> {
    fn value(&self, pi: &[f64]) -> f64 {
        let n = euclid(pi);
        let mut s = 0.0;
        for (x, w) in self.model.points().zip(self.model.weights()) {
            let v = self.utility.value(dot(x, pi) - self.delta * n);
            if v == f64::NEG_INFINITY {
                return v;
            }
            s += w * v;
        }
        s
    }

    fn grad_hess(&self, pi: &[f64]) -> (nalgebra::DVector<f64>, nalgebra::DMatrix<f64>) {
        let d = pi.len();
        let n = euclid(pi).max(1e-300);
        let e: Vec<f64> = pi.iter().map(|p| p / n).collect();
        let mut g = nalgebra::DVector::zeros(d);
        let mut h = nalgebra::DMatrix::zeros(d, d);
        let mut eu1 = 0.0;
        for (x, w) in self.model.points().zip(self.model.weights()) {
            let y = dot(x, pi) - self.delta * n;
            let (u1, u2) = (self.utility.du(y), self.utility.d2u(y));
            eu1 += w * u1;
            let z: Vec<f64> = x.iter().zip(&e).map(|(a, b)| a - self.delta * b).collect();
            for r in 0..d {
                g[r] += w * u1 * z[r];
                for c in 0..d {
                    h[(r, c)] += w * u2 * z[r] * z[c];
                }
            }
        }
        for r in 0..d {
            for c in 0..d {
                let proj = if r == c { 1.0 } else { 0.0 } - e[r] * e[c];
                h[(r, c)] -= self.delta * eu1 * proj / n;
            }
        }
        (g, h)
    }
}

/// Exact robust problem for p = inf: maximize E_P[u(<X, pi> - delta |pi|)].
pub fn robust_solve_inf(spec: &ProblemSpec, delta: f64) -> Result<RobustSolution> {
    check_delta(delta)?;
    if !spec.order.is_infinite() {
        return Err(invalid("robust_solve_inf needs p = inf"));
    }
    if delta == 0.0 {
        return from_baseline(spec);
    }
    // In one dimension the worst point of [x - delta, x + delta] within S is the clipped shift.
    let clip = if spec.dim() == 1 { ClipMode::Clip } else { ClipMode::Error };
    let (pi, value) = if spec.dim() == 1 {
        let (lo, hi) = (spec.actions.lower()[0], spec.actions.upper()[0]);
        let mut best: Option<(Vec<f64>, f64)> = None;
        for sign in [1.0, -1.0] {
            let (a, b) = if sign > 0.0 { (lo.max(0.0), hi) } else { (lo, hi.min(0.0)) };
            if a > b {
                continue;
            }
            let shifted = translate(&spec.model, &[-sign * delta], clip)?;
            let half = ActionSpace::interval(a, b)?;
            let (p, v, ..) = maximize(&shifted, &spec.utility, &half, None)?;
            if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
                best = Some((p, v));
            }
        }
        best.ok_or_else(|| invalid("empty action space"))?
    } else {
        let obj = ShiftedObjective { model: &spec.model, utility: &spec.utility, delta };
        let zero = spec.actions.project(&vec![0.0; spec.dim()]);
        let mut cand = (zero.clone(), obj.value(&zero));
        let base = solve_baseline(spec)?;
        if !base.is_zero() {
            let r = crate::optimize::newton_box(
                &obj,
                &base.pi_star,
                spec.actions.lower(),
                spec.actions.upper(),
                1e-12,
                200,
            );
            if let Ok(r) = r {
                if r.value > cand.1 && euclid(&r.x) > ZERO_THRESHOLD {
                    cand = (r.x, r.value);
                }
            }
        }
        cand
    };
    let n = euclid(&pi);
    let adversary = if n <= ZERO_THRESHOLD {
        spec.model.clone()
    } else {
        let dir: Vec<f64> = pi.iter().map(|p| -delta * p / n).collect();
        translate(&spec.model, &dir, clip)?
    };
    let transport_cost = transport_cost(&spec.model, &adversary, spec.order)?;
    let mut sol = RobustSolution {
        delta,
        value,
        pi_delta: pi,
        adversary,
        transport_cost,
        robust_davis: None,
        method: RobustMethod::InfExact,
        duality_gap: None,
    };
    if let Some(g) = &spec.payoff {
        sol.robust_davis = Some(price_from_solution(spec, g, &sol)?);
    }
    Ok(sol)
}

fn transport_cost(p: &DiscreteMeasure, q: &DiscreteMeasure, order: WassersteinOrder) -> Result<f64> {
    if p.dim() > 1 && (p.len() > crate::measures::EXACT_LP_CAP || q.len() > crate::measures::EXACT_LP_CAP) {
        // Translations move every atom by the same vector; the cost is its length.
        let diff: f64 = p
            .points()
            .zip(q.points())
            .map(|(a, b)| euclid(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>()))
            .fold(0.0, f64::max);
        return Ok(diff);
    }
    wasserstein_distance(p, q, order)
}

fn from_baseline(spec: &ProblemSpec) -> Result<RobustSolution> {
    let base = solve_baseline(spec)?;
    let mut sol = RobustSolution {
        delta: 0.0,
        value: base.value,
        pi_delta: base.pi_star.clone(),
        adversary: spec.model.clone(),
        transport_cost: 0.0,
        robust_davis: None,
        method: if spec.order.is_infinite() { RobustMethod::InfExact } else { RobustMethod::FinitePOracle },
        duality_gap: None,
    };
    if let Some(g) = &spec.payoff {
        sol.robust_davis = Some(price_from_solution(spec, g, &sol)?);
    }
    Ok(sol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub value: f64,
    pub adversary: DiscreteMeasure,
    /// Sum of w |y - x|^p over the constructed transport plan.
    pub plan_cost: f64,
    /// Best Lagrangian lower bound found.
    pub dual_bound: f64,
}

/// Minimize sum_i w_i phi(y_i) over transport kernels with budget sum w |y - x|^p <= delta^p,
/// each atom searching [lo_i, hi_i].
struct Kernel<'a> {
    xs: &'a [f64],
    ws: &'a [f64],
    lo: Vec<f64>,
    hi: Vec<f64>,
    p: f64,
    grid: usize,
}

struct AtomGrid {
    ys: Vec<f64>,
    costs: Vec<f64>,
    phis: Vec<f64>,
}

impl Kernel<'_> {
    fn grids(&self, phi: &dyn Fn(f64) -> f64) -> Vec<AtomGrid> {
        let n = self.grid;
        (0..self.xs.len())
            .map(|i| {
                let x = self.xs[i];
                let mut ys = vec![x];
                for (r, sgn) in [(self.hi[i] - x, 1.0), (x - self.lo[i], -1.0)] {
                    if r > 0.0 {
                        for k in 0..=n {
                            let f = k as f64 / n as f64;
                            ys.push(x + sgn * r * 10f64.powf(-12.0 * (1.0 - f)));
                            ys.push(x + sgn * r * f);
                        }
                    }
                }
                ys.sort_by(|a, b| a.total_cmp(b));
                ys.dedup();
                let costs = ys.iter().map(|y| (y - x).abs().powf(self.p)).collect();
                let phis = ys.iter().map(|y| phi(*y)).collect();
                AtomGrid { ys, costs, phis }
            })
            .collect()
    }

    /// argmin over atom i's search set of phi(y) + lam |y - x|^p.
    fn atom_min(&self, i: usize, g: &AtomGrid, phi: &dyn Fn(f64) -> f64, lam: f64) -> (f64, f64, f64) {
        let mut k = 0;
        let mut best = f64::INFINITY;
        for j in 0..g.ys.len() {
            let h = g.phis[j] + lam * g.costs[j];
            if h < best {
                best = h;
                k = j;
            }
        }
        let x = self.xs[i];
        let (a, b) = (g.ys[k.saturating_sub(1)], g.ys[(k + 1).min(g.ys.len() - 1)]);
        let mut y = g.ys[k];
        if b > a && best.is_finite() {
            let h = |t: f64| phi(t) + lam * (t - x).abs().powf(self.p);
            let (t, v) = golden_min(h, a, b, 1e-14 * (1.0 + b.abs()));
            if v < best {
                y = t;
            }
        }
        (y, phi(y), (y - x).abs().powf(self.p))
    }

    fn configuration(&self, grids: &[AtomGrid], phi: &dyn Fn(f64) -> f64, lam: f64) -> Config {
        let mut ys = Vec::with_capacity(self.xs.len());
        let (mut value, mut cost, mut lagr) = (0.0, 0.0, 0.0);
        for (i, (grid, w)) in grids.iter().zip(self.ws).enumerate() {
            let (y, f, c) = self.atom_min(i, grid, phi, lam);
            ys.push(y);
            value += w * f;
            cost += w * c;
            lagr += w * (f + lam * c);
        }
        Config { ys, value, cost, lagr }
    }

    fn solve(&self, phi: &dyn Fn(f64) -> f64, delta: f64, steps: usize) -> KernelSolution {
        let budget = delta.powf(self.p);
        let grids = self.grids(phi);
        let base: f64 = self.xs.iter().zip(self.ws).map(|(x, w)| w * phi(*x)).sum();
        let stay = KernelSolution {
            value: base,
            frags: self.xs.iter().zip(self.ws).map(|(x, w)| (*x, *x, *w)).collect(),
            cost: 0.0,
            dual: base,
        };
        if budget == 0.0 {
            return stay;
        }
        // Unbounded below: reach -inf with arbitrarily little mass.
        for (i, g) in grids.iter().enumerate() {
            if let Some(j) = g.phis.iter().position(|v| *v == f64::NEG_INFINITY) {
                if self.ws[i] > 0.0 {
                    let v = (budget / (self.ws[i] * g.costs[j])).min(1.0);
                    let mut frags = stay.frags.clone();
                    frags[i] = (self.xs[i], self.xs[i], self.ws[i] * (1.0 - v));
                    frags.push((self.xs[i], g.ys[j], self.ws[i] * v));
                    return KernelSolution {
                        value: f64::NEG_INFINITY,
                        frags,
                        cost: self.ws[i] * v * g.costs[j],
                        dual: f64::NEG_INFINITY,
                    };
                }
            }
        }
        let free = self.configuration(&grids, phi, 0.0);
        let mut best = if free.cost <= budget {
            KernelSolution {
                value: free.value,
                frags: self.frags(&free, &free, 1.0),
                cost: free.cost,
                dual: free.value,
            }
        } else {
            let (mut llo, mut lhi) = (-30.0f64, 30.0f64);
            let mut clo = free;
            let mut chi = self.configuration(&grids, phi, 10f64.powf(lhi));
            let mut dual = (clo.lagr - 0.0 * budget).max(chi.lagr - 10f64.powf(lhi) * budget);
            for _ in 0..steps {
                let m = 0.5 * (llo + lhi);
                let lam = 10f64.powf(m);
                let c = self.configuration(&grids, phi, lam);
                dual = dual.max(c.lagr - lam * budget);
                if c.cost >= budget {
                    llo = m;
                    clo = c;
                } else {
                    lhi = m;
                    chi = c;
                }
            }
            let theta = if clo.cost > chi.cost { (budget - chi.cost) / (clo.cost - chi.cost) } else { 1.0 };
            let theta = theta.clamp(0.0, 1.0);
            KernelSolution {
                value: theta * clo.value + (1.0 - theta) * chi.value,
                frags: self.frags(&clo, &chi, theta),
                cost: theta * clo.cost + (1.0 - theta) * chi.cost,
                dual,
            }
        };
        // Budget concentrated on a single atom.
        for (i, g) in grids.iter().enumerate() {
            if self.ws[i] == 0.0 {
                continue;
            }
            let phi_x = phi(self.xs[i]);
            for j in 0..g.ys.len() {
                if g.costs[j] == 0.0 {
                    continue;
                }
                let v = (budget / (self.ws[i] * g.costs[j])).min(1.0);
                let val = base + self.ws[i] * v * (g.phis[j] - phi_x);
                if val < best.value {
                    let mut frags = stay.frags.clone();
                    frags[i] = (self.xs[i], self.xs[i], self.ws[i] * (1.0 - v));
                    frags.push((self.xs[i], g.ys[j], self.ws[i] * v));
                    best = KernelSolution { value: val, frags, cost: self.ws[i] * v * g.costs[j], dual: best.dual };
                }
            }
        }
        best
    }

    fn frags(&self, lo: &Config, hi: &Config, theta: f64) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(2 * self.xs.len());
        for i in 0..self.xs.len() {
            if lo.ys[i] == hi.ys[i] {
                out.push((self.xs[i], lo.ys[i], self.ws[i]));
            } else {
                out.push((self.xs[i], lo.ys[i], self.ws[i] * theta));
                out.push((self.xs[i], hi.ys[i], self.ws[i] * (1.0 - theta)));
            }
        }
        out
    }
}

struct Config {
    ys: Vec<f64>,
    value: f64,
    cost: f64,
    lagr: f64,
}

struct KernelSolution {
    value: f64,
    /// (source atom, destination, mass)
    frags: Vec<(f64, f64, f64)>,
    cost: f64,
    dual: f64,
}

impl KernelSolution {
    fn measure(&self, space: &StateSpace) -> Result<DiscreteMeasure> {
        let kept: Vec<&(f64, f64, f64)> = self.frags.iter().filter(|f| f.2 > 0.0).collect();
        let ys: Vec<f64> = kept.iter().map(|f| f.1).collect();
        let ws: Vec<f64> = kept.iter().map(|f| f.2).collect();
        let total: f64 = ws.iter().sum();
        let ws: Vec<f64> = ws.iter().map(|w| w / total).collect();
        DiscreteMeasure::from_scalars(&ys, &ws, space.clone())
    }
}

fn search_cap(xs: &[f64]) -> f64 {
    1e3 * (1.0 + xs.iter().fold(0.0f64, |m, x| m.max(x.abs())))
}

fn oracle_checks(p: &DiscreteMeasure, delta: f64) -> Result<()> {
    check_delta(delta)?;
    if p.dim() != 1 {
        return Err(invalid("the finite-p oracle works in dimension one only"));
    }
    if p.len() > ORACLE_ATOM_CAP {
        return Err(Error::TooLarge(format!("{} atoms, oracle cap is {ORACLE_ATOM_CAP}", p.len())));
    }
    Ok(())
}

/// Worst-case expected utility of the fixed strategy `pi` over the ball B_delta(P).
pub fn adversary_inner_inf(
    p: &DiscreteMeasure,
    utility: &Utility,
    pi: &[f64],
    delta: f64,
    order: WassersteinOrder,
) -> Result<InnerResult> {
    adversary_inner_with(p, utility, pi, delta, order, OracleOptions::default())
}

pub fn adversary_inner_with(
    p: &DiscreteMeasure,
    utility: &Utility,
    pi: &[f64],
    delta: f64,
    order: WassersteinOrder,
    opts: OracleOptions,
) -> Result<InnerResult> {
    oracle_checks(p, delta)?;
    opts.validate()?;
    if pi.len() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: pi.len() });
    }
    let pi = pi[0];
    let xs = p.coords();
    let space = p.space();
    let (slo, shi) = (space.lower()[0], space.upper()[0]);
    let phi = |y: f64| utility.value(pi * y);
    if delta == 0.0 || pi == 0.0 {
        let v = p.expect(|x| phi(x[0]));
        return Ok(InnerResult { value: v, adversary: p.clone(), plan_cost: 0.0, dual_bound: v });
    }
    let cap = search_cap(xs);
    if order.is_infinite() {
        let ys: Vec<f64> = xs.iter().map(|x| (x - delta * pi.signum()).clamp(slo, shi)).collect();
        let adversary = DiscreteMeasure::from_scalars(&ys, p.weights(), space.clone())?;
        let v = adversary.expect(|y| phi(y[0]));
        return Ok(InnerResult { value: v, adversary, plan_cost: delta, dual_bound: v });
    }
    // Losses only come from moving wealth down: search against the sign of pi.
    let (lo, hi): (Vec<f64>, Vec<f64>) = if pi > 0.0 {
        (xs.iter().map(|x| slo.max(x - cap)).collect(), xs.to_vec())
    } else {
        (xs.to_vec(), xs.iter().map(|x| shi.min(x + cap)).collect())
    };
    let k = Kernel { xs, ws: p.weights(), lo, hi, p: order.p(), grid: opts.grid };
    let sol = k.solve(&phi, delta, opts.bisection_steps);
    Ok(InnerResult {
        value: sol.value,
        adversary: sol.measure(space)?,
        plan_cost: sol.cost,
        dual_bound: sol.dual,
    })
}

/// inf over B_delta(P) of E[g]; used on the pi = 0 branch of the robust Davis price.
pub fn payoff_infimum(p: &DiscreteMeasure, g: &Payoff, delta: f64, order: WassersteinOrder) -> Result<f64> {
    check_delta(delta)?;
    if p.dim() != 1 {
        return Err(invalid("payoffs are defined on one-dimensional models only"));
    }
    let xs = p.coords();
    let space = p.space();
    let (slo, shi) = (space.lower()[0], space.upper()[0]);
    if delta == 0.0 {
        return Ok(p.expect(|x| g.value(x[0])));
    }
    if order.is_infinite() {
        return Ok(p.expect(|x| g.minimize_on((x[0] - delta).max(slo), (x[0] + delta).min(shi)).1));
    }
    oracle_checks(p, delta)?;
    let cap = search_cap(xs);
    let lo = xs.iter().map(|x| slo.max(x - cap)).collect();
    let hi = xs.iter().map(|x| shi.min(x + cap)).collect();
    let k = Kernel { xs, ws: p.weights(), lo, hi, p: order.p(), grid: OracleOptions::default().grid };
    Ok(k.solve(&|y| g.value(y), delta, OracleOptions::default().bisection_steps).value)
}

/// Robust problem for finite p in d = 1: golden-section search over pi of the inner oracle.
pub fn robust_solve_p(spec: &ProblemSpec, delta: f64) -> Result<RobustSolution> {
    robust_solve_p_with(spec, delta, OracleOptions::default())
}

pub fn robust_solve_p_with(spec: &ProblemSpec, delta: f64, opts: OracleOptions) -> Result<RobustSolution> {
    if spec.order.is_infinite() {
        return Err(invalid("robust_solve_p needs finite p"));
    }
    oracle_checks(&spec.model, delta)?;
    opts.validate()?;
    growth_guard(spec)?;
    if delta == 0.0 {
        return from_baseline(spec);
    }
    let base = solve_baseline(spec)?;
    let inner = |pi: f64| {
        adversary_inner_with(&spec.model, &spec.utility, &[pi], delta, spec.order, opts)
            .map(|r| r.value)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let (alo, ahi) = (spec.actions.lower()[0], spec.actions.upper()[0]);
    let ps = base.pi_star[0];
    let pad = 0.1 * ps.abs() + 1e-3;
    let (mut a, mut b) = ((ps.min(0.0) - pad).max(alo), (ps.max(0.0) + pad).min(ahi));
    let mut best = golden_max(inner, a, b, OUTER_TOL);
    for _ in 0..40 {
        let hit_lo = best.0 - a <= 10.0 * OUTER_TOL && a > alo;
        let hit_hi = b - best.0 <= 10.0 * OUTER_TOL && b < ahi;
        if !hit_lo && !hit_hi {
            break;
        }
        let w = b - a;
        if hit_lo {
            a = (a - w).max(alo);
        }
        if hit_hi {
            b = (b + w).min(ahi);
        }
        best = golden_max(inner, a, b, OUTER_TOL);
    }
    // pi = 0 is never worse than a nearby point by more than rounding; prefer it exactly.
    let zero_ok = alo <= 0.0 && 0.0 <= ahi;
    let mut pi = best.0;
    if zero_ok && inner(0.0) >= best.1 {
        pi = 0.0;
    }
    let r = adversary_inner_with(&spec.model, &spec.utility, &[pi], delta, spec.order, opts)?;
    if !r.value.is_finite() {
        return Err(Error::NoConvergence("robust value is -inf on the whole action space".into()));
    }
    let transport_cost = wasserstein_distance(&spec.model, &r.adversary, spec.order)?;
    let mut sol = RobustSolution {
        delta,
        value: r.value,
        pi_delta: vec![pi],
        adversary: r.adversary,
        transport_cost,
        robust_davis: None,
        method: RobustMethod::FinitePOracle,
        duality_gap: Some(r.value - r.dual_bound),
    };
    if let Some(g) = &spec.payoff {
        sol.robust_davis = Some(price_from_solution(spec, g, &sol)?);
    }
    Ok(sol)
}

/// Dispatch on the order: exact for p = inf, oracle otherwise.
pub fn robust_solve(spec: &ProblemSpec, delta: f64) -> Result<RobustSolution> {
    robust_solve_with(spec, delta, OracleOptions::default())
}

pub fn robust_solve_with(spec: &ProblemSpec, delta: f64, opts: OracleOptions) -> Result<RobustSolution> {
    if spec.order.is_infinite() {
        robust_solve_inf(spec, delta)
    } else {
        robust_solve_p_with(spec, delta, opts)
    }
}

fn price_from_solution(spec: &ProblemSpec, g: &Payoff, sol: &RobustSolution) -> Result<f64> {
    if spec.dim() != 1 {
        return Err(invalid("payoffs are defined on one-dimensional models only"));
    }
    if euclid(&sol.pi_delta) <= ZERO_THRESHOLD {
        return payoff_infimum(&spec.model, g, sol.delta, spec.order);
    }
    let pi = sol.pi_delta[0];
    let u = &spec.utility;
    let num = sol.adversary.expect(|y| u.du(pi * y[0]) * g.value(y[0]));
    let den = sol.adversary.expect(|y| u.du(pi * y[0]));
    Ok(num / den)
}

/// Robust Davis price: the pricing measure of the adversary, or inf_B E[g] when pi_delta = 0.
pub fn robust_davis_price(spec: &ProblemSpec, g: &Payoff, delta: f64) -> Result<f64> {
    g.validate()?;
    let sol = robust_solve(spec, delta)?;
    price_from_solution(spec, g, &sol)
}

/// First-order approximation: push P along x - delta T(x), move pi to pi* + delta pi*'(0),
/// and price under the resulting marginal-utility measure.
pub fn robust_davis_first_order(spec: &ProblemSpec, g: &Payoff, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if spec.dim() != 1 {
        return Err(invalid("payoffs are defined on one-dimensional models only"));
    }
    let base = solve_baseline(spec)?;
    let (dpi, _) = optimizer_sensitivity(spec, &base)?;
    let pi = base.pi_star[0] + delta * dpi[0];
    let free = unbounded(&spec.model)?;
    let moved = pushforward(
        &free,
        |x| vec![x[0] - delta * transport_direction(spec, &base, x).map(|t| t[0]).unwrap_or(f64::NAN)],
        ClipMode::Error,
    )?;
    let u = &spec.utility;
    let num = moved.expect(|y| u.du(pi * y[0]) * g.value(y[0]));
    let den = moved.expect(|y| u.du(pi * y[0]));
    Ok(num / den)
}

/// |E[X]| under the adversary reweighted by u'(<X, pi_delta>).
pub fn martingale_check_robust(spec: &ProblemSpec, sol: &RobustSolution) -> Result<f64> {
    if euclid(&sol.pi_delta) <= ZERO_THRESHOLD {
        return Err(Error::ZeroOptimizer);
    }
    let q = crate::baseline::marginal_utility_measure(&sol.adversary, &spec.utility, &sol.pi_delta)?;
    Ok(euclid(&q.mean()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustGrid {
    pub solutions: Vec<RobustSolution>,
    /// Indices k where V(delta_k) exceeds V(delta_{k-1}) beyond rounding.
    pub violations: Vec<usize>,
}

impl RobustGrid {
    pub fn monotone(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Solve on a grid of radii in parallel and check that V is nonincreasing.
pub fn robust_grid(spec: &ProblemSpec, deltas: &[f64]) -> Result<RobustGrid> {
    robust_grid_with(spec, deltas, OracleOptions::default())
}

pub fn robust_grid_with(spec: &ProblemSpec, deltas: &[f64], opts: OracleOptions) -> Result<RobustGrid> {
    let mut order: Vec<usize> = (0..deltas.len()).collect();
    order.sort_by(|a, b| deltas[*a].total_cmp(&deltas[*b]));
    let solved: Vec<Result<RobustSolution>> = deltas.par_iter().map(|d| robust_solve_with(spec, *d, opts)).collect();
    let solutions = solved.into_iter().collect::<Result<Vec<_>>>()?;
    let mut violations = vec![];
    for w in order.windows(2) {
        let (prev, next) = (&solutions[w[0]], &solutions[w[1]]);
        if next.value > prev.value + 1e-10 * (1.0 + prev.value.abs()) {
            violations.push(w[1]);
        }
    }
    Ok(RobustGrid { solutions, violations })
}
