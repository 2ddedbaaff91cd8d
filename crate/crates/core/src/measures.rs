//! Finitely supported probability measures, the models built from them, and
//! Wasserstein distances between them.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature;

pub const WEIGHT_TOL: f64 = 1e-12;
/// Largest atom count per measure for the exact multi-dimensional transport LP.
pub const EXACT_LP_CAP: usize = 12;
pub const DEFAULT_NODES: usize = 128;

/// Closed box in R^d. Bounds may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl StateSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(invalid("state space bounds must be non-empty and of equal length"));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if l.is_nan() || u.is_nan() || !(l < u) {
                return Err(invalid(format!("state space needs lower < upper, got [{l}, {u}]")));
            }
        }
        Ok(StateSpace { lower, upper })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn whole(dim: usize) -> Self {
        StateSpace { lower: vec![f64::NEG_INFINITY; dim], upper: vec![f64::INFINITY; dim] }
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

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    pub fn clip(&self, x: &mut [f64]) {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*l, *u);
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|b| b.is_finite())
    }

    /// Euclidean diameter; infinite for unbounded boxes.
    pub fn diameter(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| (u - l) * (u - l)).sum::<f64>().sqrt()
    }

    pub fn on_boundary(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).any(|(v, (l, u))| v == l || v == u)
    }
}

/// Order p of the Wasserstein distance together with its conjugate q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WassersteinOrder {
    p: f64,
}

impl WassersteinOrder {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p <= 1.0 {
            return Err(invalid(format!("Wasserstein order must lie in (1, inf], got {p}")));
        }
        Ok(WassersteinOrder { p })
    }

    pub fn infinite() -> Self {
        WassersteinOrder { p: f64::INFINITY }
    }

    /// Order with the given conjugate exponent q >= 1 (q = 1 means p = inf).
    pub fn from_q(q: f64) -> Result<Self> {
        if q.is_nan() || q < 1.0 || q.is_infinite() {
            return Err(invalid(format!("conjugate exponent must lie in [1, inf), got {q}")));
        }
        if q == 1.0 {
            return Ok(Self::infinite());
        }
        Self::new(q / (q - 1.0))
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        if self.p.is_infinite() {
            1.0
        } else {
            self.p / (self.p - 1.0)
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.p.is_infinite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    /// A model that is genuinely discrete.
    Exact,
    /// A discretization of a continuous model.
    Quadrature,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    space: StateSpace,
    kind: MeasureKind,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>, space: StateSpace) -> Result<Self> {
        let dim = space.dim();
        let mut flat = Vec::with_capacity(points.len() * dim);
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            flat.extend_from_slice(p);
        }
        Self::from_flat(dim, flat, weights, space, MeasureKind::Exact)
    }

    pub fn from_scalars(xs: &[f64], ws: &[f64], space: StateSpace) -> Result<Self> {
        if space.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: space.dim() });
        }
        Self::from_flat(1, xs.to_vec(), ws.to_vec(), space, MeasureKind::Exact)
    }

    pub fn dirac(x: Vec<f64>, space: StateSpace) -> Result<Self> {
        Self::new(vec![x], vec![1.0], space)
    }

    pub(crate) fn from_flat(
        dim: usize,
        points: Vec<f64>,
        mut weights: Vec<f64>,
        space: StateSpace,
        kind: MeasureKind,
    ) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("a measure needs at least one atom"));
        }
        if points.len() != weights.len() * dim {
            return Err(invalid(format!(
                "{} weights for {} coordinates in dimension {dim}",
                weights.len(),
                points.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(invalid(format!("weights must be finite and nonnegative, got {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(invalid(format!("weights sum to {total}, not 1")));
        }
        for w in weights.iter_mut() {
            *w /= total;
        }
        for x in points.chunks(dim) {
            if x.iter().any(|v| !v.is_finite()) || !space.contains(x) {
                return Err(Error::OutsideStateSpace(x.to_vec()));
            }
        }
        Ok(DiscreteMeasure { dim, points, weights, space, kind })
    }

    /// Same atoms and weights on a different state space.
    pub fn with_space(&self, space: StateSpace) -> Result<Self> {
        if space.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: space.dim() });
        }
        Self::from_flat(self.dim, self.points.clone(), self.weights.clone(), space, self.kind)
    }

    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        Self::from_flat(self.dim, self.points.clone(), weights, self.space.clone(), self.kind)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks(self.dim)
    }

    /// Flat coordinate storage; for d = 1 these are the atoms themselves.
    pub fn coords(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn expect(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.points().zip(&self.weights).map(|(x, w)| if *w == 0.0 { 0.0 } else { w * f(x) }).sum()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (x, w) in self.points().zip(&self.weights) {
            for (mk, xk) in m.iter_mut().zip(x) {
                *mk += w * xk;
            }
        }
        m
    }

    /// Mass sitting on the boundary of the state space.
    pub fn boundary_mass(&self) -> f64 {
        self.points().zip(&self.weights).filter(|(x, _)| self.space.on_boundary(x)).map(|(_, w)| w).sum()
    }

    fn support(&self) -> Vec<(&[f64], f64)> {
        self.points().zip(self.weights.iter().copied()).filter(|(_, w)| *w > 0.0).collect()
    }
}

fn default_nodes() -> usize {
    DEFAULT_NODES
}

fn default_truncated_nodes() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[serde(untagged)]
pub enum Points {
    Scalars(Vec<f64>),
    Vectors(Vec<Vec<f64>>),
}

/// Descriptor of a baseline model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelKind {
    /// a * delta(-1) + (1 - a) * delta(1).
    Binomial { a: f64 },
    Normal {
        mu: f64,
        sigma: f64,
        #[serde(default = "default_nodes")]
        n_nodes: usize,
    },
    /// X = exp(Z) - 1 with Z ~ N(mu, sigma^2).
    ShiftedLognormal {
        mu: f64,
        sigma: f64,
        #[serde(default = "default_nodes")]
        n_nodes: usize,
    },
    /// N(mu, sigma^2) conditioned on [mu - radius, mu + radius], Gauss-Legendre nodes.
    TruncatedNormal {
        mu: f64,
        sigma: f64,
        radius: f64,
        #[serde(default = "default_truncated_nodes")]
        n_nodes: usize,
    },
    Explicit { points: Points, weights: Vec<f64> },
}

pub fn make_model(kind: &ModelKind) -> Result<DiscreteMeasure> {
    match kind {
        ModelKind::Binomial { a } => {
            if !(*a > 0.0 && *a < 1.0) {
                return Err(invalid(format!("binomial needs a in (0, 1), got {a}")));
            }
            let space = StateSpace::interval(-1.0 - a, 1.0 + a)?;
            DiscreteMeasure::from_scalars(&[-1.0, 1.0], &[*a, 1.0 - a], space)
        }
        ModelKind::Normal { mu, sigma, n_nodes } => {
            check_scale(*mu, *sigma)?;
            let (z, w) = quadrature::standard_normal(*n_nodes)?;
            let x = z.iter().map(|z| mu + sigma * z).collect();
            DiscreteMeasure::from_flat(1, x, w, StateSpace::whole(1), MeasureKind::Quadrature)
        }
        ModelKind::ShiftedLognormal { mu, sigma, n_nodes } => {
            check_scale(*mu, *sigma)?;
            let (z, w) = quadrature::standard_normal(*n_nodes)?;
            let x = z.iter().map(|z| (mu + sigma * z).exp_m1()).collect();
            let space = StateSpace::interval(-1.0, f64::INFINITY)?;
            DiscreteMeasure::from_flat(1, x, w, space, MeasureKind::Quadrature)
        }
        ModelKind::TruncatedNormal { mu, sigma, radius, n_nodes } => {
            check_scale(*mu, *sigma)?;
            if !(*radius > 0.0) || !radius.is_finite() {
                return Err(invalid(format!("truncation radius must be positive, got {radius}")));
            }
            let (lo, hi) = (mu - radius, mu + radius);
            let (x, w) = quadrature::weighted_legendre(*n_nodes, lo, hi, |x| {
                (-0.5 * ((x - mu) / sigma).powi(2)).exp()
            })?;
            DiscreteMeasure::from_flat(1, x, w, StateSpace::interval(lo, hi)?, MeasureKind::Quadrature)
        }
        ModelKind::Explicit { points, weights } => match points {
            Points::Scalars(xs) => DiscreteMeasure::from_scalars(xs, weights, StateSpace::whole(1)),
            Points::Vectors(vs) => {
                let dim = vs.first().map(|v| v.len()).unwrap_or(1);
                DiscreteMeasure::new(vs.clone(), weights.clone(), StateSpace::whole(dim))
            }
        },
    }
}

fn check_scale(mu: f64, sigma: f64) -> Result<()> {
    if !mu.is_finite() || !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid(format!("need finite mu and sigma > 0, got mu={mu}, sigma={sigma}")));
    }
    Ok(())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

// Segments of mass below this are rounding debris of the quantile merge.
const MASS_EPS: f64 = 1e-14;

pub fn wasserstein_distance(
    p: &DiscreteMeasure,
    q: &DiscreteMeasure,
    order: WassersteinOrder,
) -> Result<f64> {
    if p.dim != q.dim {
        return Err(Error::DimensionMismatch { expected: p.dim, got: q.dim });
    }
    if p.dim == 1 {
        return Ok(quantile_coupling(p, q, order));
    }
    let (a, b) = (p.support(), q.support());
    if a.len() > EXACT_LP_CAP || b.len() > EXACT_LP_CAP {
        return Err(Error::TooLarge(format!(
            "{}x{} atoms, cap is {EXACT_LP_CAP}x{EXACT_LP_CAP}",
            a.len(),
            b.len()
        )));
    }
    if order.is_infinite() {
        bottleneck(&a, &b)
    } else {
        transport_lp(&a, &b, order.p())
    }
}

fn sorted_support(m: &DiscreteMeasure) -> Vec<(f64, f64)> {
    let mut s: Vec<(f64, f64)> =
        m.points.iter().copied().zip(m.weights.iter().copied()).filter(|(_, w)| *w > 0.0).collect();
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    s
}

fn quantile_coupling(p: &DiscreteMeasure, q: &DiscreteMeasure, order: WassersteinOrder) -> f64 {
    let (a, b) = (sorted_support(p), sorted_support(q));
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0].1, b[0].1);
    let mut acc = 0.0f64;
    loop {
        let m = ra.min(rb);
        let d = (a[i].0 - b[j].0).abs();
        if order.is_infinite() {
            if m > MASS_EPS {
                acc = acc.max(d);
            }
        } else {
            acc += m * d.powf(order.p());
        }
        ra -= m;
        rb -= m;
        let adv_a = ra <= MASS_EPS && i + 1 < a.len();
        let adv_b = rb <= MASS_EPS && j + 1 < b.len();
        if !adv_a && !adv_b {
            break;
        }
        if adv_a {
            i += 1;
            ra += a[i].1;
        }
        if adv_b {
            j += 1;
            rb += b[j].1;
        }
    }
    if order.is_infinite() {
        acc
    } else {
        acc.powf(1.0 / order.p())
    }
}

fn transport_lp(a: &[(&[f64], f64)], b: &[(&[f64], f64)], p: f64) -> Result<f64> {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = a
        .iter()
        .map(|(x, _)| b.iter().map(|(y, _)| lp.add_var(dist(x, y).powf(p), (0.0, f64::INFINITY))).collect())
        .collect();
    for (i, (_, w)) in a.iter().enumerate() {
        let row: Vec<_> = vars[i].iter().map(|v| (*v, 1.0)).collect();
        lp.add_constraint(&row[..], ComparisonOp::Eq, *w);
    }
    for (j, (_, w)) in b.iter().enumerate() {
        let col: Vec<_> = vars.iter().map(|r| (r[j], 1.0)).collect();
        lp.add_constraint(&col[..], ComparisonOp::Eq, *w);
    }
    let cost = lp_objective(&lp)?;
    Ok(cost.max(0.0).powf(1.0 / p))
}

fn lp_objective(lp: &Problem) -> Result<f64> {
    let sol = lp
        .solve()
        .map_err(|e| Error::Numerical(format!("transport LP: {e}")))?
        .into_solution()
        .map_err(|_| Error::Numerical("transport LP interrupted".into()))?;
    Ok(sol.objective())
}

/// Smallest threshold t such that a coupling using only pairs at distance <= t exists.
fn bottleneck(a: &[(&[f64], f64)], b: &[(&[f64], f64)]) -> Result<f64> {
    let mut cands: Vec<f64> = a.iter().flat_map(|(x, _)| b.iter().map(move |(y, _)| dist(x, y))).collect();
    cands.sort_by(|x, y| x.total_cmp(y));
    cands.dedup();
    let feasible = |t: f64| -> Result<bool> {
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let mut vars = vec![vec![None; b.len()]; a.len()];
        for (i, (x, _)) in a.iter().enumerate() {
            for (j, (y, _)) in b.iter().enumerate() {
                if dist(x, y) <= t {
                    vars[i][j] = Some(lp.add_var(1.0, (0.0, f64::INFINITY)));
                }
            }
        }
        for (i, (_, w)) in a.iter().enumerate() {
            let row: Vec<_> = vars[i].iter().flatten().map(|v| (*v, 1.0)).collect();
            if row.is_empty() {
                return Ok(false);
            }
            lp.add_constraint(&row[..], ComparisonOp::Le, *w);
        }
        for (j, (_, w)) in b.iter().enumerate() {
            let col: Vec<_> = vars.iter().filter_map(|r| r[j]).map(|v| (v, 1.0)).collect();
            if col.is_empty() {
                return Ok(false);
            }
            lp.add_constraint(&col[..], ComparisonOp::Le, *w);
        }
        Ok(lp_objective(&lp)? >= 1.0 - 1e-9)
    };
    let (mut lo, mut hi) = (0usize, cands.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(cands[mid])? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(cands[lo])
}

/// What to do with images that leave the state space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClipMode {
    Error,
    Clip,
}

pub fn pushforward(
    p: &DiscreteMeasure,
    map: impl Fn(&[f64]) -> Vec<f64>,
    mode: ClipMode,
) -> Result<DiscreteMeasure> {
    let mut out = Vec::with_capacity(p.points.len());
    for x in p.points() {
        let mut y = map(x);
        if y.len() != p.dim {
            return Err(Error::DimensionMismatch { expected: p.dim, got: y.len() });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("map sent {x:?} to {y:?}")));
        }
        if !p.space.contains(&y) {
            match mode {
                ClipMode::Error => return Err(Error::OutsideStateSpace(y)),
                ClipMode::Clip => p.space.clip(&mut y),
            }
        }
        out.extend(y);
    }
    DiscreteMeasure::from_flat(p.dim, out, p.weights.clone(), p.space.clone(), p.kind)
}

/// Shift every atom by `c`.
pub fn translate(p: &DiscreteMeasure, c: &[f64], mode: ClipMode) -> Result<DiscreteMeasure> {
    pushforward(p, |x| x.iter().zip(c).map(|(a, b)| a + b).collect(), mode)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mean: Vec<f64>,
    pub covariance: DMatrix<f64>,
    /// mu / sigma, present for one-dimensional non-degenerate measures.
    pub sharpe: Option<f64>,
}

pub fn moments(p: &DiscreteMeasure) -> Moments {
    let mean = p.mean();
    let d = p.dim;
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for (x, w) in p.points().zip(&p.weights) {
        for r in 0..d {
            for c in 0..d {
                cov[(r, c)] += w * (x[r] - mean[r]) * (x[c] - mean[c]);
            }
        }
    }
    let sharpe = if d == 1 && cov[(0, 0)] > 0.0 { Some(mean[0] / cov[(0, 0)].sqrt()) } else { None };
    Moments { mean, covariance: cov, sharpe }
}

pub fn sharpe_ratio(p: &DiscreteMeasure) -> Result<f64> {
    if p.dim != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: p.dim });
    }
    moments(p).sharpe.ok_or_else(|| invalid("Sharpe ratio undefined for zero variance"))
}

/// True iff every nonzero strategy loses with positive probability and gains with positive probability.
pub fn no_arbitrage_check(p: &DiscreteMeasure) -> bool {
    let sup = p.support();
    if p.dim == 1 {
        return sup.iter().any(|(x, _)| x[0] > 0.0) && sup.iter().any(|(x, _)| x[0] < 0.0);
    }
    let d = p.dim;
    let mat = DMatrix::from_fn(sup.len(), d, |i, k| sup[i].0[k]);
    if mat.rank(1e-12) < d {
        return false;
    }
    // max t subject to sum l_i x_i = 0, sum l_i = 1, l_i >= t.
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let t = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    let lam: Vec<_> = sup.iter().map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    for k in 0..d {
        let row: Vec<_> = lam.iter().zip(&sup).map(|(v, (x, _))| (*v, x[k])).collect();
        lp.add_constraint(&row[..], ComparisonOp::Eq, 0.0);
    }
    let all: Vec<_> = lam.iter().map(|v| (*v, 1.0)).collect();
    lp.add_constraint(&all[..], ComparisonOp::Eq, 1.0);
    for v in &lam {
        lp.add_constraint(&[(*v, 1.0), (t, -1.0)][..], ComparisonOp::Ge, 0.0);
    }
    match lp_objective(&lp) {
        Ok(tmax) => tmax > 1e-12,
        Err(_) => false,
    }
}

pub(crate) fn euclid(v: &[f64]) -> f64 {
    norm(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn line(xs: &[f64], ws: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::from_scalars(xs, ws, StateSpace::whole(1)).unwrap()
    }

    #[test]
    fn binomial_atoms() {
        let m = make_model(&ModelKind::Binomial { a: 0.25 }).unwrap();
        assert_eq!(m.coords(), &[-1.0, 1.0]);
        assert_eq!(m.weights(), &[0.25, 0.75]);
        assert_abs_diff_eq!(m.mean()[0], 0.5, epsilon = 1e-15);
        assert!(make_model(&ModelKind::Binomial { a: 1.0 }).is_err());
    }

    #[test]
    fn normal_moments_match() {
        let m = make_model(&ModelKind::Normal { mu: 0.1, sigma: 0.2, n_nodes: 128 }).unwrap();
        let mo = moments(&m);
        assert!((mo.mean[0] - 0.1).abs() <= 1e-10);
        assert!((mo.covariance[(0, 0)] - 0.04).abs() <= 1e-10);
    }

    #[test]
    fn lognormal_mean() {
        let m = make_model(&ModelKind::ShiftedLognormal { mu: -0.5, sigma: 1.0, n_nodes: 256 }).unwrap();
        assert!(m.mean()[0].abs() <= 1e-8);
        assert!(m.coords().iter().all(|x| *x > -1.0));
    }

    #[test]
    fn truncated_normal_inside() {
        let m = make_model(&ModelKind::TruncatedNormal { mu: 0.2, sigma: 0.2, radius: 0.4, n_nodes: 16 })
            .unwrap();
        assert_eq!(m.len(), 16);
        assert!(m.coords().iter().all(|x| (-0.2..=0.6).contains(x)));
        assert!((m.mean()[0] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn weight_validation() {
        assert!(DiscreteMeasure::from_scalars(&[0.0, 1.0], &[0.5, 0.6], StateSpace::whole(1)).is_err());
        assert!(DiscreteMeasure::from_scalars(&[0.0, 1.0], &[1.2, -0.2], StateSpace::whole(1)).is_err());
        assert!(DiscreteMeasure::from_scalars(&[], &[], StateSpace::whole(1)).is_err());
        let s = StateSpace::interval(-1.0, 1.0).unwrap();
        assert!(matches!(
            DiscreteMeasure::from_scalars(&[2.0], &[1.0], s),
            Err(Error::OutsideStateSpace(_))
        ));
        let m = line(&[0.0, 0.0], &[0.5, 0.5]);
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn point_mass_distance() {
        for p in [1.5, 2.0, 4.0, f64::INFINITY] {
            let o = WassersteinOrder::new(p).unwrap();
            let d = wasserstein_distance(&line(&[0.0], &[1.0]), &line(&[-0.7], &[1.0]), o).unwrap();
            assert_abs_diff_eq!(d, 0.7, epsilon = 1e-15);
        }
    }

    #[test]
    fn binomial_w2() {
        let a = make_model(&ModelKind::Binomial { a: 0.25 }).unwrap();
        let b = make_model(&ModelKind::Binomial { a: 0.5 }).unwrap();
        let d = wasserstein_distance(&a, &b, WassersteinOrder::new(2.0).unwrap()).unwrap();
        assert_abs_diff_eq!(d, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn translation_shift_inf() {
        let a = make_model(&ModelKind::Binomial { a: 0.25 }).unwrap();
        let b = translate(&a, &[-0.1], ClipMode::Error).unwrap();
        assert_eq!(b.weights(), a.weights());
        assert_abs_diff_eq!(b.coords()[0], -1.1, epsilon = 1e-15);
        assert_abs_diff_eq!(b.coords()[1], 0.9, epsilon = 1e-15);
        let d = wasserstein_distance(&a, &b, WassersteinOrder::infinite()).unwrap();
        assert_abs_diff_eq!(d, 0.1, epsilon = 1e-15);
        let id = pushforward(&a, |x| x.to_vec(), ClipMode::Error).unwrap();
        assert_eq!(id, a);
    }

    #[test]
    fn pushforward_clip_modes() {
        let a = make_model(&ModelKind::Binomial { a: 0.25 }).unwrap();
        assert!(translate(&a, &[-0.5], ClipMode::Error).is_err());
        let c = translate(&a, &[-0.5], ClipMode::Clip).unwrap();
        assert_abs_diff_eq!(c.coords()[0], -1.25, epsilon = 1e-15);
    }

    #[test]
    fn multi_dim_lp_matches_translation() {
        let s = StateSpace::whole(2);
        let p = DiscreteMeasure::new(vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![-1.0, 0.5]], vec![0.2, 0.3, 0.5], s)
            .unwrap();
        let q = translate(&p, &[0.3, -0.4], ClipMode::Error).unwrap();
        for pp in [2.0, 3.0, f64::INFINITY] {
            let d = wasserstein_distance(&p, &q, WassersteinOrder::new(pp).unwrap()).unwrap();
            assert_abs_diff_eq!(d, 0.5, epsilon = 1e-9);
        }
    }

    #[test]
    fn multi_dim_cap() {
        let pts: Vec<Vec<f64>> = (0..13).map(|i| vec![i as f64, 0.0]).collect();
        let p = DiscreteMeasure::new(pts, vec![1.0 / 13.0; 13], StateSpace::whole(2)).unwrap();
        let r = wasserstein_distance(&p, &p, WassersteinOrder::new(2.0).unwrap());
        assert!(matches!(r, Err(Error::TooLarge(_))));
    }

    #[test]
    fn moments_and_sharpe() {
        let m = make_model(&ModelKind::Binomial { a: 0.25 }).unwrap();
        let mo = moments(&m);
        assert_abs_diff_eq!(mo.covariance[(0, 0)], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(sharpe_ratio(&m).unwrap(), 0.5 / 0.75f64.sqrt(), epsilon = 1e-15);
        assert!(sharpe_ratio(&line(&[0.3], &[1.0])).is_err());
    }

    #[test]
    fn arbitrage() {
        assert!(no_arbitrage_check(&make_model(&ModelKind::Binomial { a: 0.25 }).unwrap()));
        assert!(!no_arbitrage_check(&line(&[1.0], &[1.0])));
        assert!(!no_arbitrage_check(&line(&[0.5, 1.0], &[0.5, 0.5])));
        let s = StateSpace::whole(2);
        let tri = DiscreteMeasure::new(
            vec![vec![1.0, 0.0], vec![-1.0, 1.0], vec![-1.0, -1.0]],
            vec![1.0 / 3.0; 3],
            s.clone(),
        )
        .unwrap();
        assert!(no_arbitrage_check(&tri));
        let flat = DiscreteMeasure::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], vec![0.5, 0.5], s.clone()).unwrap();
        assert!(!no_arbitrage_check(&flat));
        let off =
            DiscreteMeasure::new(vec![vec![1.0, 1.0], vec![2.0, -1.0], vec![1.0, 0.0]], vec![1.0 / 3.0; 3], s)
                .unwrap();
        assert!(!no_arbitrage_check(&off));
    }

    #[test]
    fn order_conjugates() {
        assert_eq!(WassersteinOrder::infinite().q(), 1.0);
        assert_abs_diff_eq!(WassersteinOrder::new(2.0).unwrap().q(), 2.0);
        assert_abs_diff_eq!(WassersteinOrder::from_q(1.5).unwrap().p(), 3.0, epsilon = 1e-12);
        assert!(WassersteinOrder::new(1.0).is_err());
    }
}
