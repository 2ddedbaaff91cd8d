//! Command implementations: each returns a table or a library error.

use rayon::prelude::*;

use robustfolio::baseline::{davis_price, solve_baseline};
use robustfolio::fixtures::{fixture, Fixture, FixtureSpec};
use robustfolio::measures::{moments, StateSpace, WassersteinOrder};
use robustfolio::robust::{robust_davis_first_order, robust_grid_with, robust_solve_inf, RobustMethod};
use robustfolio::sensitivity::{
    davis_sensitivity, optimizer_sensitivity, sensitivity_report, value_sensitivity, Branch,
};
use robustfolio::{Error, Result};

use crate::config::RunConfig;
use crate::table::ResultTable;

fn vec_columns(name: &str, d: usize) -> Vec<String> {
    if d == 1 {
        vec![name.to_string()]
    } else {
        (1..=d).map(|i| format!("{name}_{i}")).collect()
    }
}

fn opt(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub fn solve(cfg: &RunConfig) -> Result<ResultTable> {
    let spec = cfg.problem()?;
    let sol = solve_baseline(&spec)?;
    let mut cols = vec_columns("pi_star", spec.dim());
    cols.extend(["V0", "foc_residual", "on_boundary", "davis_price"].map(String::from));
    let mut t = ResultTable::new(cols);
    let price = match &spec.payoff {
        Some(g) => davis_price(&spec, &sol, g)?,
        None => f64::NAN,
    };
    let mut row = sol.pi_star.clone();
    let foc = sol.foc_residual.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    row.extend([sol.value, foc, flag(sol.on_boundary), price]);
    t.push(row);
    Ok(t)
}

pub fn sensitivity(cfg: &RunConfig) -> Result<ResultTable> {
    let spec = cfg.problem()?;
    let sol = solve_baseline(&spec)?;
    let r = sensitivity_report(&spec, &sol, spec.payoff.as_ref())?;
    let d = spec.dim();
    let mut cols = vec!["q".to_string()];
    cols.extend(vec_columns("pi_star", d));
    cols.extend(["V0", "V_prime0"].map(String::from));
    cols.extend(vec_columns("pi_prime0", d));
    cols.extend(["kappa_u", "davis_price", "davis_prime0", "kl_V_prime0", "pi_star_zero"].map(String::from));
    let mut row = vec![r.q];
    row.extend(&r.pi_star);
    row.extend([r.value0, r.v_prime0]);
    row.extend(r.pi_prime0.clone().unwrap_or_else(|| vec![f64::NAN; d]));
    row.extend([
        opt(r.kappa_u),
        opt(r.davis_price),
        opt(r.davis_prime0),
        opt(r.kl_v_prime0),
        flag(r.branch == Branch::PiStarZero),
    ]);
    let mut t = ResultTable::new(cols);
    t.push(row);
    Ok(t)
}

pub fn robust(cfg: &RunConfig) -> Result<ResultTable> {
    let spec = cfg.problem()?;
    let deltas = cfg.deltas()?;
    let grid = robust_grid_with(&spec, &deltas, cfg.oracle())?;
    let mut cols = vec!["delta".to_string(), "V_delta".to_string()];
    cols.extend(vec_columns("pi_delta", spec.dim()));
    cols.extend(
        ["transport_cost", "robust_davis", "finite_p_oracle", "duality_gap", "monotone_violation"].map(String::from),
    );
    let mut t = ResultTable::new(cols);
    for (i, s) in grid.solutions.iter().enumerate() {
        let mut row = vec![s.delta, s.value];
        row.extend(&s.pi_delta);
        row.extend([
            s.transport_cost,
            opt(s.robust_davis),
            flag(s.method == RobustMethod::FinitePOracle),
            opt(s.duality_gap),
            flag(grid.violations.contains(&i)),
        ]);
        t.push(row);
    }
    Ok(t)
}

pub fn davis(cfg: &RunConfig) -> Result<ResultTable> {
    let spec = cfg.problem()?;
    let g = spec.payoff.clone().ok_or_else(|| Error::InvalidInput("davis needs a payoff".into()))?;
    let base = solve_baseline(&spec)?;
    let p0 = davis_price(&spec, &base, &g)?;
    let deltas = cfg.deltas()?;
    let grid = robust_grid_with(&spec, &deltas, cfg.oracle())?;
    let mut t = ResultTable::from_columns(&["delta", "davis_price", "robust_davis", "first_order"]);
    for s in &grid.solutions {
        let first = if base.is_zero() { f64::NAN } else { robust_davis_first_order(&spec, &g, s.delta)? };
        t.push(vec![s.delta, p0, opt(s.robust_davis), first]);
    }
    Ok(t)
}

pub const SWEEP_COLUMNS: [&str; 11] = [
    "param",
    "sharpe",
    "pi_star",
    "V0",
    "V_prime0",
    "pi_prime0",
    "kappa_u",
    "davis_price",
    "davis_prime0",
    "kl_V_prime0",
    "pi_star_zero",
];

fn sweep_row(cfg: &RunConfig, param: &str, v: f64) -> Result<Vec<f64>> {
    let c = cfg.with_param(param, v)?;
    let spec = c.problem()?;
    if spec.dim() != 1 {
        return Err(Error::InvalidInput("sweeps are for one-dimensional models".into()));
    }
    let sol = solve_baseline(&spec)?;
    let r = sensitivity_report(&spec, &sol, spec.payoff.as_ref())?;
    let sharpe = moments(&spec.model).sharpe.unwrap_or(f64::NAN);
    Ok(vec![
        v,
        sharpe,
        r.pi_star[0],
        r.value0,
        r.v_prime0,
        r.pi_prime0.map(|p| p[0]).unwrap_or(f64::NAN),
        opt(r.kappa_u),
        opt(r.davis_price),
        opt(r.davis_prime0),
        opt(r.kl_v_prime0),
        flag(r.branch == Branch::PiStarZero),
    ])
}

pub fn sweep(cfg: &RunConfig) -> Result<ResultTable> {
    let s = cfg.sweep.as_ref().ok_or_else(|| Error::InvalidInput("sweep needs a sweep specification".into()))?;
    let grid = s.grid.values()?;
    let rows: Vec<Result<Vec<f64>>> = grid.par_iter().map(|v| sweep_row(cfg, &s.param, *v)).collect();
    let mut t = ResultTable::from_columns(&SWEEP_COLUMNS);
    for r in rows {
        t.push(r?);
    }
    Ok(t)
}

struct Check {
    name: String,
    closed: f64,
    module: f64,
}

fn check(name: &str, closed: Option<f64>, module: f64) -> Option<Check> {
    closed.map(|c| Check { name: name.to_string(), closed: c, module })
}

/// Closed forms against module output. Rows: closed form, module, absolute deviation.
pub fn oracle_check(f: &Fixture) -> Result<ResultTable> {
    let inf = WassersteinOrder::infinite();
    let spec = f.problem(inf)?;
    let base = solve_baseline(&spec)?;
    let mut checks: Vec<Option<Check>> = vec![
        check("pi_star", Some(f.pi_star()), base.pi_star[0]),
        check("V0", Some(f.value0()), base.value),
        check("V_prime0", f.v_prime0(1.0), value_sensitivity(&spec, &base)?),
        check("kl_V_prime0", f.kl_v_prime0(), opt(robustfolio::sensitivity::kl_value_sensitivity(&spec, &base).ok())),
    ];
    if !base.is_zero() {
        for q in [1.0, 2.0] {
            let s = spec.with_order(WassersteinOrder::from_q(q)?);
            // Finite p is guarded for exponential tails on unbounded supports.
            let Ok((dpi, _)) = optimizer_sensitivity(&s, &base) else {
                continue;
            };
            checks.push(check(&format!("pi_prime0_q{q}"), f.pi_prime0(q), dpi[0]));
            if matches!(f.spec, FixtureSpec::CappedExpLimit { .. }) {
                checks.push(check(&format!("pi_prime0_q{q}_printed"), f.pi_prime0_printed(q), dpi[0]));
            }
            checks.push(check(&format!("V_prime0_q{q}"), f.v_prime0(q), value_sensitivity(&s, &base)?));
        }
    }
    let wide = match f.spec {
        FixtureSpec::BinomialLog { .. } => spec.clone().with_state_space(StateSpace::interval(-2.0, 2.0)?)?,
        _ => spec.clone(),
    };
    for d in [0.05, 0.1] {
        if let (Some(v), Some(p)) = (f.value_delta_inf(d), f.pi_delta_inf(d)) {
            let r = robust_solve_inf(&wide, d)?;
            checks.push(check(&format!("V_delta_{d}"), Some(v), r.value));
            checks.push(check(&format!("pi_delta_{d}"), Some(p), r.pi_delta[0]));
        }
    }
    for (k, g) in f.payoffs().iter().enumerate() {
        let with_g = wide.clone().with_payoff(g.clone())?;
        checks.push(check(&format!("davis_g{k}"), f.davis_price(g), davis_price(&spec, &base, g)?));
        checks.push(check(&format!("davis_prime0_g{k}"), f.davis_prime0_inf(g), davis_sensitivity(&spec, &base, g)?));
        if let Some(p) = f.robust_davis_inf(g, 0.05) {
            let r = robust_solve_inf(&with_g, 0.05)?;
            checks.push(check(&format!("robust_davis_g{k}_0.05"), Some(p), opt(r.robust_davis)));
        }
    }
    let checks: Vec<Check> = checks.into_iter().flatten().collect();
    let mut t = ResultTable::new(checks.iter().map(|c| c.name.clone()).collect());
    t.push(checks.iter().map(|c| c.closed).collect());
    t.push(checks.iter().map(|c| c.module).collect());
    t.push(checks.iter().map(|c| (c.closed - c.module).abs()).collect());
    Ok(t)
}

pub fn oracle_check_config(cfg: &RunConfig, name: Option<&str>) -> Result<ResultTable> {
    let f = match (&cfg.fixture, name) {
        (_, Some(n)) => robustfolio::fixtures::fixture_by_name(n)?,
        (Some(spec), None) => fixture(spec.clone())?,
        (None, None) => return Err(Error::InvalidInput("oracle-check needs a fixture".into())),
    };
    oracle_check(&f)
}
