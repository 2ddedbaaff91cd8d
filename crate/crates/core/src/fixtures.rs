//! Closed-form worked examples used as ground truth, and a Black-Scholes helper.
//!
//! Where a printed formula and a direct derivation disagree, both are exposed:
//! the `*_printed` evaluators reproduce the formula as stated, the others are
//! what the general theory gives.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::baseline::{ActionSpace, ProblemSpec};
use crate::error::{invalid, Result};
use crate::measures::{make_model, ModelKind, WassersteinOrder};
use crate::payoff::{Payoff, Smoothing};
use crate::utility::Utility;

pub const DEFAULT_KAPPA: f64 = 1e-3;
/// Softplus width for kinked payoffs on quadrature models.
pub const CATALOG_SMOOTHING: f64 = 0.05;

fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}

fn default_nodes() -> usize {
    crate::measures::DEFAULT_NODES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum FixtureSpec {
    /// a delta(-1) + (1 - a) delta(1), u(x) = ln(1 + x).
    BinomialLog { a: f64 },
    /// Same model, u(x) = -exp(-gamma x).
    BinomialExp { a: f64, gamma: f64 },
    /// N(mu, sigma^2), u(x) = -exp(-gamma x).
    NormalExp {
        mu: f64,
        sigma: f64,
        gamma: f64,
        #[serde(default = "default_nodes")]
        n_nodes: usize,
    },
    /// N(mu, sigma^2) with the exponential utility made linear below -1/kappa.
    CappedExpLimit {
        mu: f64,
        sigma: f64,
        gamma: f64,
        #[serde(default = "default_kappa")]
        kappa: f64,
        #[serde(default = "default_nodes")]
        n_nodes: usize,
    },
    /// X = exp(Z) - 1, Z ~ N(mu, sigma^2), log investor on A = [0, 1], butterfly with strike K.
    LognormalButterfly {
        mu: f64,
        sigma: f64,
        #[serde(rename = "K")]
        k: f64,
        #[serde(default = "default_nodes")]
        n_nodes: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub spec: FixtureSpec,
    pub description: &'static str,
}

pub const CATALOG: [&str; 5] =
    ["binomial_log", "binomial_exp", "normal_exp", "capped_exp_limit", "lognormal_butterfly"];

/// Look up a fixture by catalog name with the given parameters.
pub fn fixture(spec: FixtureSpec) -> Result<Fixture> {
    let description = match &spec {
        FixtureSpec::BinomialLog { a } => {
            check_a(*a)?;
            "binomial model, log investor with unit capital"
        }
        FixtureSpec::BinomialExp { a, gamma } => {
            check_a(*a)?;
            check_pos("gamma", *gamma)?;
            "binomial model, exponential investor"
        }
        FixtureSpec::NormalExp { mu, sigma, gamma, .. } => {
            check_normal(*mu, *sigma)?;
            check_pos("gamma", *gamma)?;
            "normal model, exponential investor"
        }
        FixtureSpec::CappedExpLimit { mu, sigma, gamma, kappa, .. } => {
            check_normal(*mu, *sigma)?;
            check_pos("gamma", *gamma)?;
            check_pos("kappa", *kappa)?;
            "normal model, exponential utility with a linear lower tail, kappa -> 0 limits"
        }
        FixtureSpec::LognormalButterfly { mu, sigma, k, .. } => {
            check_pos("sigma", *sigma)?;
            if !(*mu < -sigma * sigma / 2.0) {
                return Err(invalid(format!("lognormal fixture needs mu < -sigma^2/2, got mu={mu}")));
            }
            check_pos("K", *k)?;
            "shifted lognormal model, log investor, butterfly payoff"
        }
    };
    Ok(Fixture { spec, description })
}

/// Catalog name and default parameters.
pub fn fixture_by_name(name: &str) -> Result<Fixture> {
    let spec = match name {
        "binomial_log" => FixtureSpec::BinomialLog { a: 0.25 },
        "binomial_exp" => FixtureSpec::BinomialExp { a: 0.25, gamma: 1.0 },
        "normal_exp" => FixtureSpec::NormalExp { mu: 0.1, sigma: 0.2, gamma: 1.0, n_nodes: default_nodes() },
        "capped_exp_limit" => FixtureSpec::CappedExpLimit {
            mu: 0.1,
            sigma: 0.2,
            gamma: 1.0,
            kappa: DEFAULT_KAPPA,
            n_nodes: default_nodes(),
        },
        "lognormal_butterfly" => {
            FixtureSpec::LognormalButterfly { mu: -0.5, sigma: 0.1, k: 0.5, n_nodes: default_nodes() }
        }
        other => return Err(invalid(format!("unknown fixture {other:?}; known: {}", CATALOG.join(", ")))),
    };
    fixture(spec)
}

fn check_a(a: f64) -> Result<()> {
    if !(a > 0.0 && a < 0.5) {
        return Err(invalid(format!("fixture needs a in (0, 1/2), got {a}")));
    }
    Ok(())
}

fn check_pos(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(invalid(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

fn check_normal(mu: f64, sigma: f64) -> Result<()> {
    check_pos("sigma", sigma)?;
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(invalid(format!("fixture needs mu > 0, got {mu}")));
    }
    Ok(())
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// E[(e^Z - k)^+] for Z ~ N(mu, sigma^2).
pub fn bs_value(k: f64, mu: f64, sigma: f64) -> Result<f64> {
    check_pos("sigma", sigma)?;
    let fwd = (mu + 0.5 * sigma * sigma).exp();
    if k <= 0.0 {
        return Ok(fwd - k);
    }
    let n = std_normal();
    let d1 = (mu + sigma * sigma - k.ln()) / sigma;
    Ok(fwd * n.cdf(d1) - k * n.cdf(d1 - sigma))
}

impl Fixture {
    /// The matching numerical problem on the fixture's natural state space.
    pub fn problem(&self, order: WassersteinOrder) -> Result<ProblemSpec> {
        let (model, utility, actions) = match &self.spec {
            FixtureSpec::BinomialLog { a } => (
                ModelKind::Binomial { a: *a },
                Utility::LogShifted { w0: 1.0 },
                ActionSpace::interval(-1.0 + a, 1.0 - a)?,
            ),
            FixtureSpec::BinomialExp { a, gamma } => {
                (ModelKind::Binomial { a: *a }, Utility::Exponential { gamma: *gamma }, ActionSpace::whole(1))
            }
            FixtureSpec::NormalExp { mu, sigma, gamma, n_nodes } => (
                ModelKind::Normal { mu: *mu, sigma: *sigma, n_nodes: *n_nodes },
                Utility::Exponential { gamma: *gamma },
                ActionSpace::whole(1),
            ),
            FixtureSpec::CappedExpLimit { mu, sigma, gamma, kappa, n_nodes } => (
                ModelKind::Normal { mu: *mu, sigma: *sigma, n_nodes: *n_nodes },
                Utility::CappedExponential { gamma: *gamma, kappa: *kappa },
                ActionSpace::whole(1),
            ),
            FixtureSpec::LognormalButterfly { mu, sigma, n_nodes, .. } => (
                ModelKind::ShiftedLognormal { mu: *mu, sigma: *sigma, n_nodes: *n_nodes },
                Utility::LogShifted { w0: 1.0 },
                ActionSpace::interval(0.0, 1.0)?,
            ),
        };
        ProblemSpec::new(make_model(&model)?, utility, actions, order)
    }

    /// Payoffs with closed forms for this fixture.
    pub fn payoffs(&self) -> Vec<Payoff> {
        match &self.spec {
            FixtureSpec::BinomialLog { .. } | FixtureSpec::BinomialExp { .. } => {
                vec![Payoff::Power { k: 3 }, Payoff::call(0.0), Payoff::abs_shift(0.5)]
            }
            // Quadrature cannot resolve a sharp kink in g', so kinks are rounded at a visible width.
            FixtureSpec::NormalExp { .. } | FixtureSpec::CappedExpLimit { .. } => [
                Payoff::Power { k: 2 },
                Payoff::Power { k: 3 },
                Payoff::call(0.1),
                Payoff::butterfly(0.2),
                Payoff::abs_shift(0.05),
            ]
            .iter()
            .map(|g| g.smoothed(Smoothing::Softplus { width: CATALOG_SMOOTHING }))
            .collect(),
            FixtureSpec::LognormalButterfly { k, .. } => vec![Payoff::butterfly(*k)],
        }
    }

    pub fn pi_star(&self) -> f64 {
        match &self.spec {
            FixtureSpec::BinomialLog { a } => 1.0 - 2.0 * a,
            FixtureSpec::BinomialExp { a, gamma } => (a / (1.0 - a)).ln() / (-2.0 * gamma),
            FixtureSpec::NormalExp { mu, sigma, gamma, .. }
            | FixtureSpec::CappedExpLimit { mu, sigma, gamma, .. } => mu / (gamma * sigma * sigma),
            FixtureSpec::LognormalButterfly { .. } => 0.0,
        }
    }

    pub fn value0(&self) -> f64 {
        match &self.spec {
            FixtureSpec::BinomialLog { a } => a * (2.0 * a).ln() + (1.0 - a) * (2.0 - 2.0 * a).ln(),
            FixtureSpec::BinomialExp { a, .. } => -2.0 * (a * (1.0 - a)).sqrt(),
            FixtureSpec::NormalExp { mu, sigma, .. } | FixtureSpec::CappedExpLimit { mu, sigma, .. } => {
                -(-mu * mu / (2.0 * sigma * sigma)).exp()
            }
            FixtureSpec::LognormalButterfly { .. } => 0.0,
        }
    }

    /// V(delta) for p = inf, where it has a closed form.
    pub fn value_delta_inf(&self, delta: f64) -> Option<f64> {
        match &self.spec {
            FixtureSpec::BinomialLog { a } => {
                Some(a * (2.0 * a / (1.0 - delta)).ln() + (1.0 - a) * ((2.0 - 2.0 * a) / (1.0 + delta)).ln())
            }
            FixtureSpec::NormalExp { mu, sigma, .. } if delta <= *mu => {
                Some(-(-(mu - delta).powi(2) / (2.0 * sigma * sigma)).exp())
            }
            _ => None,
        }
    }

    /// Robust optimizer for p = inf.
    pub fn pi_delta_inf(&self, delta: f64) -> Option<f64> {
        match &self.spec {
            FixtureSpec::BinomialLog { a } => Some((1.0 - 2.0 * a - delta) / (1.0 - delta * delta)),
            FixtureSpec::NormalExp { mu, sigma, gamma, .. } if delta <= *mu => {
                Some((mu - delta) / (gamma * sigma * sigma))
            }
            _ => None,
        }
    }

    /// V'(0) for conjugate exponent q.
    pub fn v_prime0(&self, q: f64) -> Option<f64> {
        match &self.spec {
            FixtureSpec::BinomialLog { a } => {
                let m = a * (2.0 * a).powf(-q) + (1.0 - a) * (2.0 - 2.0 * a).powf(-q);
                Some(-m.powf(1.0 / q) * (1.0 - 2.0 * a))
            }
            FixtureSpec::BinomialExp { gamma, .. } => Some(gamma * self.v_prime0_printed(q)?),
            FixtureSpec::NormalExp { mu, sigma, .. } if q == 1.0 => {
                Some(-(-mu * mu / (2.0 * sigma * sigma)).exp() * mu / (sigma * sigma))
            }
            FixtureSpec::CappedExpLimit { mu, sigma, .. } => {
                let s2 = sigma * sigma;
                Some(-(-mu * mu / s2 + q * mu * mu / (2.0 * s2)).exp() * mu / s2)
            }
            _ => None,
        }
    }

    /// V'(0) as printed: for the binomial exponential case without the gamma
    /// factor, for the normal case without the sign.
    pub fn v_prime0_printed(&self, q: f64) -> Option<f64> {
        match &self.spec {
            FixtureSpec::BinomialExp { a, .. } => {
                let r = a / (1.0 - a);
                let m = a * r.powf(-q / 2.0) + (1.0 - a) * r.powf(q / 2.0);
                Some(-m.powf(1.0 / q) * self.pi_star())
            }
            FixtureSpec::NormalExp { mu, sigma, .. } => {
                Some((-mu * mu / (2.0 * sigma * sigma)).exp() * mu / (sigma * sigma))
            }
            _ => self.v_prime0(q),
        }
    }

    /// pi*'(0) for conjugate exponent q.
    pub fn pi_prime0(&self, q: f64) -> Option<f64> {
        match &self.spec {
            FixtureSpec::BinomialLog { a } => {
                let b = 1.0 - a;
                Some(-a * b * (a.powf(1.0 - q) + b.powf(1.0 - q)).powf(1.0 / q - 1.0) * (a.powf(-q) + b.powf(-q)))
            }
            FixtureSpec::NormalExp { sigma, gamma, .. } if q == 1.0 => Some(-1.0 / (gamma * sigma * sigma)),
            FixtureSpec::CappedExpLimit { mu, sigma, gamma, .. } => {
                let r = mu * mu / (sigma * sigma);
                Some(-((q - 1.0) * r / 2.0).exp() * (1.0 + (q - 1.0) * r) / (gamma * sigma * sigma))
            }
            _ => None,
        }
    }

    /// The printed kappa -> 0 limit of pi*'(0), kept for comparison.
    pub fn pi_prime0_printed(&self, q: f64) -> Option<f64> {
        match &self.spec {
            FixtureSpec::CappedExpLimit { mu, sigma, gamma, .. } => {
                let s2 = sigma * sigma;
                Some(
                    -gamma.powf(1.0 / q + q - 3.0) / s2
                        * ((q - 1.0) / 2.0).exp()
                        * (-mu * mu * (1.0 - q) / s2 + 1.0),
                )
            }
            _ => self.pi_prime0(q),
        }
    }

    /// Davis price at delta = 0.
    pub fn davis_price(&self, g: &Payoff) -> Option<f64> {
        match &self.spec {
            FixtureSpec::BinomialLog { .. } | FixtureSpec::BinomialExp { .. } => {
                Some(0.5 * (g.value(-1.0) + g.value(1.0)))
            }
            _ => self.robust_davis_inf(g, 0.0),
        }
    }

    /// Robust Davis price for p = inf.
    pub fn robust_davis_inf(&self, g: &Payoff, delta: f64) -> Option<f64> {
        match &self.spec {
            // The unique martingale measure on {-1 - delta, 1 - delta}.
            FixtureSpec::BinomialLog { .. } => {
                Some(0.5 * (1.0 - delta) * g.value(-1.0 - delta) + 0.5 * (1.0 + delta) * g.value(1.0 - delta))
            }
            // Holds while pi_delta stays nonzero.
            FixtureSpec::NormalExp { mu, .. } if delta >= *mu => None,
            FixtureSpec::NormalExp { sigma, .. } => match g {
                Payoff::Power { k: 2 } => Some(sigma * sigma),
                Payoff::Power { k } if k % 2 == 1 => Some(0.0),
                _ => None,
            },
            FixtureSpec::LognormalButterfly { mu, sigma, k, .. } => {
                let bs = |s: f64| bs_value(s, *mu, *sigma).ok();
                Some(bs(1.0 - k + delta)? - 2.0 * bs(1.0 + delta)? + bs(1.0 + k + delta)?)
            }
            _ => None,
        }
    }

    /// Printed robust Davis curves for the binomial log fixture.
    pub fn robust_davis_printed(&self, g: &Payoff, delta: f64) -> Option<f64> {
        let FixtureSpec::BinomialLog { .. } = self.spec else {
            return None;
        };
        match g {
            Payoff::Power { k: 3 } => Some(-2.0 * delta + 2.0 * delta.powi(3)),
            Payoff::Call { strike, .. } if *strike == 0.0 => Some((1.0 - delta * delta) / 2.0),
            Payoff::AbsShift { x0, .. } => Some(1.0 - delta * delta + delta * x0),
            _ => None,
        }
    }

    /// Davis price sensitivity for p = inf.
    pub fn davis_prime0_inf(&self, g: &Payoff) -> Option<f64> {
        match &self.spec {
            FixtureSpec::BinomialLog { .. } => Some(
                0.5 * (g.value(1.0) - g.value(-1.0)) - 0.5 * (g.grad(-1.0) + g.grad(1.0)),
            ),
            FixtureSpec::NormalExp { .. } => Some(0.0),
            FixtureSpec::LognormalButterfly { mu, sigma, k, .. } => {
                // -E[g'(X)] with P(e^Z > s) = Phi((mu - ln s) / sigma).
                let n = std_normal();
                let tail = |s: f64| n.cdf((mu - s.ln()) / sigma);
                Some(-(tail(1.0 - k) - 2.0 * tail(1.0) + tail(1.0 + k)))
            }
            _ => None,
        }
    }

    /// Printed general-q Davis sensitivity for g = x^3 on the binomial log fixture.
    pub fn davis_prime0_cubic_printed(&self, q: f64) -> Option<f64> {
        let FixtureSpec::BinomialLog { a } = self.spec else {
            return None;
        };
        let b = 1.0 - a;
        let s = (a.powf(1.0 - q) + b.powf(1.0 - q)).powf(1.0 / q - 1.0);
        let c = (1.0 - 2.0 * a) * 2f64.powf(q - 1.0) * s;
        Some(
            -1.0 / (4.0 * a) * ((2.0 * a).powf(1.0 - q) * c - 1.0)
                + 1.0 / (4.0 * b) * ((2.0 * b).powf(1.0 - q) * c + 1.0)
                - 1.5 * (a.powf(1.0 - q) + b.powf(1.0 - q)) * s,
        )
    }

    /// Sensitivity of the value under relative-entropy balls.
    pub fn kl_v_prime0(&self) -> Option<f64> {
        match &self.spec {
            FixtureSpec::BinomialLog { a } => {
                let (l1, l2) = ((2.0 * a).ln(), (2.0 * (1.0 - a)).ln());
                let mean = a * l1 + (1.0 - a) * l2;
                Some(-(2.0 * (a * l1 * l1 + (1.0 - a) * l2 * l2 - mean * mean)).sqrt())
            }
            FixtureSpec::BinomialExp { a, .. } => Some(-(2.0 * (1.0 - 4.0 * a * (1.0 - a))).sqrt()),
            _ => None,
        }
    }
}

/// Binomial parameter giving Sharpe ratio s: mean 1 - 2a over sd 2 sqrt(a(1-a)).
pub fn binomial_a_for_sharpe(s: f64) -> f64 {
    0.5 * (1.0 - s / (1.0 + s * s).sqrt())
}
