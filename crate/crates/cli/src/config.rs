//! Run configuration read from JSON.

use std::path::PathBuf;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use robustfolio::baseline::{ActionSpace, ProblemSpec};
use robustfolio::fixtures::FixtureSpec;
use robustfolio::measures::{make_model, ModelKind, StateSpace, WassersteinOrder};
use robustfolio::payoff::Payoff;
use robustfolio::robust::OracleOptions;
use robustfolio::utility::Utility;
use robustfolio::{Error, Result};

/// A real number or one of the tokens "inf" / "-inf".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(untagged)]
pub enum Extended {
    Number(f64),
    Token(InfToken),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
pub enum InfToken {
    #[serde(rename = "inf")]
    Inf,
    #[serde(rename = "-inf")]
    NegInf,
}

impl Extended {
    pub fn value(self) -> f64 {
        match self {
            Extended::Number(x) => x,
            Extended::Token(InfToken::Inf) => f64::INFINITY,
            Extended::Token(InfToken::NegInf) => f64::NEG_INFINITY,
        }
    }
}

/// Either an explicit list or "start:stop:step" (inclusive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range(String),
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            Grid::List(v) if !v.is_empty() => Ok(v.clone()),
            Grid::List(_) => Err(Error::InvalidInput("empty grid".into())),
            Grid::Range(s) => parse_range(s),
        }
    }
}

pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::InvalidInput(format!("grid {s:?} is not start:stop:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
    let (a, b, h) = (nums[0], nums[1], nums[2]);
    if !(h > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    let n = ((b - a) / h + 1e-9).floor() as usize;
    if n > 100_000 {
        return Err(Error::InvalidInput(format!("grid {s:?} has too many points")));
    }
    Ok((0..=n).map(|k| a + k as f64 * h).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub param: String,
    pub grid: Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelKind>,
    pub utility: Option<Utility>,
    #[serde(default = "default_p")]
    pub wasserstein_p: Extended,
    /// [lower, upper]; defaults to the whole line, or (-1 + a, 1 - a) for binomial models.
    pub action_space: Option<[Extended; 2]>,
    /// Overrides the model's natural state space.
    pub state_space: Option<[Extended; 2]>,
    pub payoff: Option<Payoff>,
    pub delta: Option<f64>,
    pub delta_grid: Option<Grid>,
    pub sweep: Option<Sweep>,
    pub fixture: Option<FixtureSpec>,
    /// Fragments per atom for the finite-p oracle.
    pub fragments: Option<usize>,
    pub output: Option<Output>,
}

fn default_p() -> Extended {
    Extended::Token(InfToken::Inf)
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: None,
            utility: None,
            wasserstein_p: default_p(),
            action_space: None,
            state_space: None,
            payoff: None,
            delta: None,
            delta_grid: None,
            sweep: None,
            fixture: None,
            fragments: None,
            output: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(d) = self.delta {
            check_delta(d)?;
        }
        if let Some(g) = &self.delta_grid {
            for d in g.values()? {
                check_delta(d)?;
            }
        }
        if let Some(s) = &self.sweep {
            s.grid.values()?;
        }
        self.order()?;
        if let Some(k) = self.fragments {
            if !(2..=4).contains(&k) {
                return Err(Error::InvalidInput(format!("fragments must be 2..=4, got {k}")));
            }
        }
        if let Some(g) = &self.payoff {
            g.validate()?;
        }
        if let Some(u) = &self.utility {
            u.validate()?;
        }
        Ok(())
    }

    pub fn order(&self) -> Result<WassersteinOrder> {
        let p = self.wasserstein_p.value();
        if p == f64::INFINITY {
            Ok(WassersteinOrder::infinite())
        } else {
            WassersteinOrder::new(p)
        }
    }

    pub fn oracle(&self) -> OracleOptions {
        OracleOptions { fragments: self.fragments.unwrap_or(2), ..OracleOptions::default() }
    }

    /// Radii to evaluate: the grid, else the single delta, else 0.
    pub fn deltas(&self) -> Result<Vec<f64>> {
        match (&self.delta_grid, self.delta) {
            (Some(g), _) => g.values(),
            (None, Some(d)) => Ok(vec![d]),
            (None, None) => Ok(vec![0.0]),
        }
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        let kind = self.model.as_ref().ok_or_else(|| Error::InvalidInput("config has no model".into()))?;
        let utility = self.utility.ok_or_else(|| Error::InvalidInput("config has no utility".into()))?;
        let mut model = make_model(kind)?;
        if let Some([lo, hi]) = self.state_space {
            if model.dim() != 1 {
                return Err(Error::InvalidInput("state_space override is for one-dimensional models".into()));
            }
            model = model.with_space(StateSpace::interval(lo.value(), hi.value())?)?;
        }
        let actions = match (self.action_space, kind) {
            (Some([lo, hi]), _) => {
                let d = model.dim();
                ActionSpace::new(vec![lo.value(); d], vec![hi.value(); d])?
            }
            (None, ModelKind::Binomial { a }) => ActionSpace::interval(-1.0 + a, 1.0 - a)?,
            (None, _) => ActionSpace::whole(model.dim()),
        };
        let spec = ProblemSpec::new(model, utility, actions, self.order()?)?;
        match &self.payoff {
            Some(g) => spec.with_payoff(g.clone()),
            None => Ok(spec),
        }
    }

    /// Copy with one named parameter replaced, for sweeps.
    pub fn with_param(&self, name: &str, v: f64) -> Result<Self> {
        let mut c = self.clone();
        let unknown = || Error::InvalidInput(format!("cannot sweep {name:?} for this config"));
        match name {
            "p" => c.wasserstein_p = Extended::Number(v),
            "delta" => c.delta = Some(v),
            "a" | "mu" | "sigma" => {
                let m = c.model.as_mut().ok_or_else(unknown)?;
                let slot = match (name, m) {
                    ("a", ModelKind::Binomial { a }) => a,
                    ("mu", ModelKind::Normal { mu, .. })
                    | ("mu", ModelKind::ShiftedLognormal { mu, .. })
                    | ("mu", ModelKind::TruncatedNormal { mu, .. }) => mu,
                    ("sigma", ModelKind::Normal { sigma, .. })
                    | ("sigma", ModelKind::ShiftedLognormal { sigma, .. })
                    | ("sigma", ModelKind::TruncatedNormal { sigma, .. }) => sigma,
                    _ => return Err(unknown()),
                };
                *slot = v;
            }
            "gamma" | "kappa" | "w0" | "eta" => {
                let u = c.utility.as_mut().ok_or_else(unknown)?;
                let slot = match (name, u) {
                    ("gamma", Utility::Exponential { gamma })
                    | ("gamma", Utility::CappedExponential { gamma, .. }) => gamma,
                    ("kappa", Utility::CappedExponential { kappa, .. }) => kappa,
                    ("w0", Utility::LogShifted { w0 }) | ("w0", Utility::Power { w0, .. }) => w0,
                    ("eta", Utility::Power { eta, .. }) => eta,
                    _ => return Err(unknown()),
                };
                *slot = v;
            }
            _ => return Err(unknown()),
        }
        c.validate()?;
        Ok(c)
    }
}

/// JSON schema of the run configuration.
pub fn schema() -> serde_json::Value {
    serde_json::to_value(schemars::schema_for!(RunConfig)).expect("schema serializes")
}

fn check_delta(d: f64) -> Result<()> {
    if !(d >= 0.0) || !d.is_finite() {
        return Err(Error::InvalidInput(format!("delta must be finite and nonnegative, got {d}")));
    }
    Ok(())
}
