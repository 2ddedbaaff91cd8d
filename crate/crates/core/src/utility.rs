//! Utility catalog with derivatives and domains.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Utility {
    /// ln(x + w0) on (-w0, inf).
    LogShifted { w0: f64 },
    /// -exp(-gamma x) on R.
    Exponential { gamma: f64 },
    /// ((x + w0)^(1 - eta) - 1) / (1 - eta) on (-w0, inf).
    Power { eta: f64, w0: f64 },
    /// -exp(-gamma x) above -1/kappa, continued linearly below it.
    CappedExponential { gamma: f64, kappa: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityEval {
    pub u: f64,
    pub du: f64,
    pub d2u: f64,
    /// Absolute risk aversion -u''/u'.
    pub risk_aversion: f64,
}

impl Utility {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Utility::LogShifted { w0 } => w0 > 0.0 && w0.is_finite(),
            Utility::Exponential { gamma } => gamma > 0.0 && gamma.is_finite(),
            Utility::Power { eta, w0 } => eta > 0.0 && eta != 1.0 && eta.is_finite() && w0 > 0.0 && w0.is_finite(),
            Utility::CappedExponential { gamma, kappa } => {
                gamma > 0.0 && gamma.is_finite() && kappa > 0.0 && kappa.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("utility parameters out of range: {self:?}")))
        }
    }

    /// Open interval D.
    pub fn domain(&self) -> (f64, f64) {
        match *self {
            Utility::LogShifted { w0 } | Utility::Power { w0, .. } => (-w0, f64::INFINITY),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn in_domain(&self, x: f64) -> bool {
        let (lo, hi) = self.domain();
        lo < x && x < hi
    }

    /// Location where u'' jumps, if any.
    pub fn kink(&self) -> Option<f64> {
        match *self {
            Utility::CappedExponential { kappa, .. } => Some(-1.0 / kappa),
            _ => None,
        }
    }

    /// True for utilities whose marginal utility grows exponentially in losses.
    pub fn exponential_tails(&self, kappa_floor: f64) -> bool {
        match *self {
            Utility::Exponential { .. } => true,
            Utility::CappedExponential { kappa, .. } => kappa < kappa_floor,
            _ => false,
        }
    }

    /// u(x), with u = -inf outside D.
    pub fn value(&self, x: f64) -> f64 {
        if !self.in_domain(x) {
            return f64::NEG_INFINITY;
        }
        match *self {
            Utility::LogShifted { w0 } => (x + w0).ln(),
            Utility::Exponential { gamma } => -(-gamma * x).exp(),
            Utility::Power { eta, w0 } => ((x + w0).powf(1.0 - eta) - 1.0) / (1.0 - eta),
            Utility::CappedExponential { gamma, kappa } => {
                if x < -1.0 / kappa {
                    let e = (gamma / kappa).exp();
                    -e + gamma * e * (x + 1.0 / kappa)
                } else {
                    -(-gamma * x).exp()
                }
            }
        }
    }

    /// u'(x); callers guarantee x in D.
    pub fn du(&self, x: f64) -> f64 {
        match *self {
            Utility::LogShifted { w0 } => 1.0 / (x + w0),
            Utility::Exponential { gamma } => gamma * (-gamma * x).exp(),
            Utility::Power { eta, w0 } => (x + w0).powf(-eta),
            Utility::CappedExponential { gamma, kappa } => {
                if x < -1.0 / kappa {
                    gamma * (gamma / kappa).exp()
                } else {
                    gamma * (-gamma * x).exp()
                }
            }
        }
    }

    /// u''(x); callers guarantee x in D. At the capped-exponential kink this is the right limit.
    pub fn d2u(&self, x: f64) -> f64 {
        match *self {
            Utility::LogShifted { w0 } => -1.0 / ((x + w0) * (x + w0)),
            Utility::Exponential { gamma } => -gamma * gamma * (-gamma * x).exp(),
            Utility::Power { eta, w0 } => -eta * (x + w0).powf(-eta - 1.0),
            Utility::CappedExponential { gamma, kappa } => {
                if x < -1.0 / kappa {
                    0.0
                } else {
                    -gamma * gamma * (-gamma * x).exp()
                }
            }
        }
    }

    pub fn evaluate(&self, x: f64) -> Result<UtilityEval> {
        if !self.in_domain(x) || x.is_nan() {
            return Err(Error::OutsideDomain(x));
        }
        let (u, du, d2u) = (self.value(x), self.du(x), self.d2u(x));
        Ok(UtilityEval { u, du, d2u, risk_aversion: -d2u / du })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    /// Largest relative error over grid points away from kinks.
    pub max_error: f64,
    /// Largest relative error over grid points whose stencil straddles a kink.
    pub kink_error: f64,
    pub kinks_hit: Vec<f64>,
    /// Grid points without an h-margin inside D.
    pub skipped: Vec<f64>,
}

fn rel(exact: f64, approx: f64) -> f64 {
    (exact - approx).abs() / exact.abs().max(approx.abs()).max(f64::MIN_POSITIVE)
}

/// Compare u' and u'' against central differences of u and u'.
pub fn finite_difference_check(u: &Utility, grid: &[f64], h: f64) -> FdReport {
    let mut rep = FdReport { max_error: 0.0, kink_error: 0.0, kinks_hit: vec![], skipped: vec![] };
    for &x in grid {
        if !u.in_domain(x - h) || !u.in_domain(x + h) {
            rep.skipped.push(x);
            continue;
        }
        let fd1 = (u.value(x + h) - u.value(x - h)) / (2.0 * h);
        let fd2 = (u.du(x + h) - u.du(x - h)) / (2.0 * h);
        let err = rel(u.du(x), fd1).max(rel(u.d2u(x), fd2));
        match u.kink() {
            Some(k) if (x - h..=x + h).contains(&k) => {
                rep.kinks_hit.push(x);
                rep.kink_error = rep.kink_error.max(err);
            }
            _ => rep.max_error = rep.max_error.max(err),
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn log_values() {
        let e = Utility::LogShifted { w0: 1.0 }.evaluate(0.5).unwrap();
        assert_abs_diff_eq!(e.u, 1.5f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(e.du, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.d2u, -4.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.risk_aversion, 2.0 / 3.0, epsilon = 1e-15);
        assert!(Utility::LogShifted { w0: 1.0 }.evaluate(-1.0).is_err());
    }

    #[test]
    fn exponential_values() {
        let e = Utility::Exponential { gamma: 1.0 }.evaluate(0.0).unwrap();
        assert_eq!((e.u, e.du, e.d2u, e.risk_aversion), (-1.0, 1.0, -1.0, 1.0));
    }

    #[test]
    fn capped_linear_branch() {
        let u = Utility::CappedExponential { gamma: 1.0, kappa: 0.5 };
        let e = u.evaluate(-3.0).unwrap();
        let e2 = std::f64::consts::E.powi(2);
        assert_abs_diff_eq!(e.u, -2.0 * e2, epsilon = 1e-12);
        assert_abs_diff_eq!(e.du, e2, epsilon = 1e-12);
        assert_eq!(e.d2u, 0.0);
        assert_abs_diff_eq!(u.value(-2.0 - 1e-12), u.value(-2.0), epsilon = 1e-9);
    }

    #[test]
    fn power_matches_log_limit() {
        let p = Utility::Power { eta: 1.0 + 1e-7, w0: 1.0 };
        let l = Utility::LogShifted { w0: 1.0 };
        assert_abs_diff_eq!(p.value(0.7), l.value(0.7), epsilon = 1e-6);
        assert!(Utility::Power { eta: 1.0, w0: 1.0 }.validate().is_err());
    }

    #[test]
    fn fd_smooth() {
        let r = finite_difference_check(&Utility::LogShifted { w0: 1.0 }, &[-0.5, 0.0, 1.0, 5.0], 1e-5);
        assert!(r.max_error <= 1e-6, "{r:?}");
        let r = finite_difference_check(&Utility::Exponential { gamma: 2.0 }, &[-1.0, 0.0, 1.0], 1e-5);
        assert!(r.max_error <= 1e-6, "{r:?}");
        assert!(r.kinks_hit.is_empty());
    }

    #[test]
    fn fd_flags_kink() {
        let u = Utility::CappedExponential { gamma: 1.0, kappa: 0.5 };
        let r = finite_difference_check(&u, &[-3.0, -2.0, -1.0], 1e-5);
        assert_eq!(r.kinks_hit, vec![-2.0]);
        assert!(r.kink_error > 0.1);
        assert!(r.max_error <= 1e-6);
    }
}
