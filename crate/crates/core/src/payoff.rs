//! Option payoffs on a one-dimensional price increment, with kink smoothing.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const DEFAULT_SMOOTHING: f64 = 1e-4;

/// How the ramp z -> z^+ is rounded near its kink.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Smoothing {
    /// (z + s)^2 / (4s) on [-s, s]; exact outside that band.
    Quadratic { width: f64 },
    /// s * ln(1 + exp(z / s)).
    Softplus { width: f64 },
    /// No rounding; the derivative at the kink is taken as 1/2.
    Exact,
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing::Quadratic { width: DEFAULT_SMOOTHING }
    }
}

impl Smoothing {
    fn validate(&self) -> Result<()> {
        match *self {
            Smoothing::Quadratic { width } | Smoothing::Softplus { width } if !(width > 0.0) => {
                Err(invalid(format!("smoothing width must be positive, got {width}")))
            }
            _ => Ok(()),
        }
    }

    fn ramp(&self, z: f64) -> f64 {
        match *self {
            Smoothing::Quadratic { width: s } => {
                if z <= -s {
                    0.0
                } else if z >= s {
                    z
                } else {
                    (z + s) * (z + s) / (4.0 * s)
                }
            }
            Smoothing::Softplus { width: s } => {
                let t = z / s;
                if t > 0.0 {
                    z + s * (-t).exp().ln_1p()
                } else {
                    s * t.exp().ln_1p()
                }
            }
            Smoothing::Exact => z.max(0.0),
        }
    }

    fn ramp_slope(&self, z: f64) -> f64 {
        match *self {
            Smoothing::Quadratic { width: s } => {
                if z <= -s {
                    0.0
                } else if z >= s {
                    1.0
                } else {
                    (z + s) / (2.0 * s)
                }
            }
            Smoothing::Softplus { width: s } => 1.0 / (1.0 + (-z / s).exp()),
            Smoothing::Exact => {
                if z > 0.0 {
                    1.0
                } else if z < 0.0 {
                    0.0
                } else {
                    0.5
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Payoff {
    /// x^k.
    Power { k: u32 },
    /// (x - strike)^+.
    Call {
        strike: f64,
        #[serde(default)]
        smoothing: Smoothing,
    },
    /// (x + K)^+ - 2 x^+ + (x - K)^+.
    Butterfly {
        #[serde(rename = "K")]
        k: f64,
        #[serde(default)]
        smoothing: Smoothing,
    },
    /// |x + x0|.
    AbsShift {
        x0: f64,
        #[serde(default)]
        smoothing: Smoothing,
    },
    /// Piecewise-linear interpolation of tabulated values.
    Table { x: Vec<f64>, y: Vec<f64> },
    Constant { c: f64 },
    /// Sum of weighted payoffs.
    Linear { terms: Vec<(f64, Payoff)> },
}

impl Payoff {
    pub fn call(strike: f64) -> Self {
        Payoff::Call { strike, smoothing: Smoothing::default() }
    }

    pub fn butterfly(k: f64) -> Self {
        Payoff::Butterfly { k, smoothing: Smoothing::default() }
    }

    pub fn abs_shift(x0: f64) -> Self {
        Payoff::AbsShift { x0, smoothing: Smoothing::default() }
    }

    /// Same payoff with a different kink rounding (no-op for smooth payoffs).
    pub fn smoothed(&self, s: Smoothing) -> Self {
        match self {
            Payoff::Call { strike, .. } => Payoff::Call { strike: *strike, smoothing: s },
            Payoff::Butterfly { k, .. } => Payoff::Butterfly { k: *k, smoothing: s },
            Payoff::AbsShift { x0, .. } => Payoff::AbsShift { x0: *x0, smoothing: s },
            Payoff::Linear { terms } => {
                Payoff::Linear { terms: terms.iter().map(|(c, g)| (*c, g.smoothed(s))).collect() }
            }
            other => other.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Payoff::Call { strike: v, smoothing } | Payoff::AbsShift { x0: v, smoothing } => {
                if !v.is_finite() {
                    return Err(invalid("payoff parameter must be finite"));
                }
                smoothing.validate()
            }
            Payoff::Butterfly { k, smoothing } => {
                if !(*k > 0.0) || !k.is_finite() {
                    return Err(invalid(format!("butterfly needs K > 0, got {k}")));
                }
                smoothing.validate()
            }
            Payoff::Table { x, y } => {
                if x.len() < 2 || x.len() != y.len() {
                    return Err(invalid("table needs at least two (x, y) pairs of equal length"));
                }
                if x.windows(2).any(|w| !(w[0] < w[1])) || x.iter().chain(y).any(|v| !v.is_finite()) {
                    return Err(invalid("table abscissae must be finite and strictly increasing"));
                }
                Ok(())
            }
            Payoff::Constant { c } if !c.is_finite() => Err(invalid("constant payoff must be finite")),
            Payoff::Linear { terms } => terms.iter().try_for_each(|(_, g)| g.validate()),
            _ => Ok(()),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Payoff::Power { k } => x.powi(*k as i32),
            Payoff::Call { strike, smoothing } => smoothing.ramp(x - strike),
            Payoff::Butterfly { k, smoothing } => {
                smoothing.ramp(x + k) - 2.0 * smoothing.ramp(x) + smoothing.ramp(x - k)
            }
            Payoff::AbsShift { x0, smoothing } => smoothing.ramp(x + x0) + smoothing.ramp(-x - x0),
            Payoff::Table { x: xs, y } => {
                let (i, t) = locate(xs, x);
                let slope = (y[i + 1] - y[i]) / (xs[i + 1] - xs[i]);
                y[i] + slope * (t - xs[i])
            }
            Payoff::Constant { c } => *c,
            Payoff::Linear { terms } => terms.iter().map(|(c, g)| c * g.value(x)).sum(),
        }
    }

    pub fn grad(&self, x: f64) -> f64 {
        match self {
            Payoff::Power { k } => {
                if *k == 0 {
                    0.0
                } else {
                    *k as f64 * x.powi(*k as i32 - 1)
                }
            }
            Payoff::Call { strike, smoothing } => smoothing.ramp_slope(x - strike),
            Payoff::Butterfly { k, smoothing } => {
                smoothing.ramp_slope(x + k) - 2.0 * smoothing.ramp_slope(x) + smoothing.ramp_slope(x - k)
            }
            Payoff::AbsShift { x0, smoothing } => {
                smoothing.ramp_slope(x + x0) - smoothing.ramp_slope(-x - x0)
            }
            Payoff::Table { x: xs, y } => {
                // Central differences on the grid, interpolated linearly.
                let n = xs.len();
                let d = |j: usize| -> f64 {
                    let (a, b) = (j.saturating_sub(1), (j + 1).min(n - 1));
                    (y[b] - y[a]) / (xs[b] - xs[a])
                };
                if x <= xs[0] {
                    return d(0);
                }
                if x >= xs[n - 1] {
                    return d(n - 1);
                }
                let (i, t) = locate(xs, x);
                let w = (t - xs[i]) / (xs[i + 1] - xs[i]);
                (1.0 - w) * d(i) + w * d(i + 1)
            }
            Payoff::Constant { .. } => 0.0,
            Payoff::Linear { terms } => terms.iter().map(|(c, g)| c * g.grad(x)).sum(),
        }
    }

    /// Points where the unsmoothed payoff fails to be differentiable.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            Payoff::Call { strike, .. } => vec![*strike],
            Payoff::Butterfly { k, .. } => vec![-k, 0.0, *k],
            Payoff::AbsShift { x0, .. } => vec![-x0],
            Payoff::Table { x, .. } => x.clone(),
            Payoff::Linear { terms } => terms.iter().flat_map(|(_, g)| g.kinks()).collect(),
            _ => vec![],
        }
    }

    /// Global minimizer of g over [lo, hi]: endpoints, kinks and a grid, then golden refinement.
    pub fn minimize_on(&self, lo: f64, hi: f64) -> (f64, f64) {
        if !(hi > lo) {
            return (lo, self.value(lo));
        }
        const N: usize = 400;
        let mut cand: Vec<f64> = (0..=N).map(|i| lo + (hi - lo) * i as f64 / N as f64).collect();
        for k in self.kinks() {
            for c in [k, k - 1e-9, k + 1e-9] {
                if (lo..=hi).contains(&c) {
                    cand.push(c);
                }
            }
        }
        let mut best = (lo, self.value(lo));
        for &c in &cand {
            let v = self.value(c);
            if v < best.1 {
                best = (c, v);
            }
        }
        let step = (hi - lo) / N as f64;
        let (a, b) = ((best.0 - step).max(lo), (best.0 + step).min(hi));
        let (y, v) = crate::optimize::golden_min(|t| self.value(t), a, b, 1e-13);
        if v < best.1 {
            (y, v)
        } else {
            best
        }
    }
}

fn locate(xs: &[f64], x: f64) -> (usize, f64) {
    let n = xs.len();
    let i = match xs.binary_search_by(|v| v.total_cmp(&x)) {
        Ok(i) => i.min(n - 2),
        Err(0) => 0,
        Err(i) => (i - 1).min(n - 2),
    };
    (i, x)
}
