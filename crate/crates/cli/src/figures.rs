//! Figure presets: the curves behind the sensitivity plots, as tables.

use rayon::prelude::*;

use robustfolio::baseline::solve_baseline;
use robustfolio::fixtures::{binomial_a_for_sharpe, fixture, Fixture, FixtureSpec, DEFAULT_KAPPA};
use robustfolio::measures::{DEFAULT_NODES, WassersteinOrder};
use robustfolio::payoff::Payoff;
use robustfolio::sensitivity::{davis_sensitivity, kl_value_sensitivity, optimizer_sensitivity, value_sensitivity};
use robustfolio::{Error, Result};

use crate::table::ResultTable;

pub const PRESETS: [&str; 6] = ["fig1", "fig2-left", "fig2-right", "fig3-left", "fig3-right", "fig4"];

fn order(p: f64) -> Result<WassersteinOrder> {
    if p.is_infinite() {
        Ok(WassersteinOrder::infinite())
    } else {
        WassersteinOrder::new(p)
    }
}

fn label(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

fn linear(a: f64, b: f64, h: f64) -> Vec<f64> {
    let n = ((b - a) / h + 1e-9).floor() as usize;
    (0..=n).map(|k| a + k as f64 * h).collect()
}

/// Linear part followed by a log-spaced tail reaching large Sharpe ratios.
fn with_tail(lin: Vec<f64>, top: f64, n: usize) -> Vec<f64> {
    let start = *lin.last().expect("nonempty");
    let mut v = lin;
    let (l0, l1) = (start.ln(), top.ln());
    v.extend((1..=n).map(|k| (l0 + (l1 - l0) * k as f64 / n as f64).exp()));
    v
}

fn rows(grid: &[f64], f: impl Fn(f64) -> Result<Vec<f64>> + Sync) -> Result<Vec<Vec<f64>>> {
    grid.par_iter().map(|s| f(*s)).collect()
}

fn assemble(columns: Vec<String>, rows: Vec<Vec<f64>>) -> ResultTable {
    let mut t = ResultTable::new(columns);
    for r in rows {
        t.push(r);
    }
    t
}

pub fn figure(name: &str) -> Result<ResultTable> {
    match name {
        "fig1" => fig1(),
        "fig2-left" => fig2(false),
        "fig2-right" => fig2(true),
        "fig3-left" => fig3_left(),
        "fig3-right" => fig3_right(),
        "fig4" => fig4(),
        other => Err(Error::InvalidInput(format!("unknown figure {other:?}; known: {}", PRESETS.join(", ")))),
    }
}

/// V'(0) for p = inf in the normal model against the Sharpe ratio, one series per mean.
fn fig1() -> Result<ResultTable> {
    let mus = [0.05, 0.1, 0.2];
    let grid = linear(0.1, 3.0, 0.1);
    let mut cols = vec!["sharpe".to_string()];
    cols.extend(mus.iter().map(|m| format!("V_prime0_mu_{m}")));
    let rows = rows(&grid, |s| {
        let mut row = vec![s];
        for mu in mus {
            let f = fixture(FixtureSpec::NormalExp { mu, sigma: mu / s, gamma: 1.0, n_nodes: DEFAULT_NODES })?;
            let spec = f.problem(WassersteinOrder::infinite())?;
            let sol = solve_baseline(&spec)?;
            row.push(value_sensitivity(&spec, &sol)?);
        }
        Ok(row)
    })?;
    Ok(assemble(cols, rows))
}

fn binomial(exp: bool, s: f64) -> Result<Fixture> {
    let a = binomial_a_for_sharpe(s);
    fixture(if exp { FixtureSpec::BinomialExp { a, gamma: 1.0 } } else { FixtureSpec::BinomialLog { a } })
}

/// V'(0) against the Sharpe ratio in the binomial model for several p, with the KL comparator.
fn fig2(exp: bool) -> Result<ResultTable> {
    let ps: Vec<f64> =
        if exp { vec![f64::INFINITY, 4.0, 2.5, 2.0, 1.5] } else { vec![f64::INFINITY, 4.0, 2.0, 1.5] };
    let lin = linear(0.05, 3.0, 0.05);
    let grid = if exp { with_tail(lin, 1e4, 40) } else { lin };
    let mut cols = vec!["sharpe".to_string(), "a".to_string()];
    cols.extend(ps.iter().map(|p| format!("V_prime0_p_{}", label(*p))));
    cols.push("kl_V_prime0".into());
    let rows = rows(&grid, |s| {
        let f = binomial(exp, s)?;
        let base = f.problem(WassersteinOrder::infinite())?;
        let sol = solve_baseline(&base)?;
        let mut row = vec![s, binomial_a_for_sharpe(s)];
        for p in &ps {
            row.push(value_sensitivity(&base.with_order(order(*p)?), &sol)?);
        }
        row.push(kl_value_sensitivity(&base, &sol)?);
        Ok(row)
    })?;
    Ok(assemble(cols, rows))
}

/// pi*'(0) in the binomial log model for p in {inf, 2, 1.5}.
fn fig3_left() -> Result<ResultTable> {
    let ps = [f64::INFINITY, 2.0, 1.5];
    let grid = linear(0.05, 3.0, 0.05);
    let mut cols = vec!["sharpe".to_string()];
    cols.extend(ps.iter().map(|p| format!("pi_prime0_p_{}", label(*p))));
    let rows = rows(&grid, |s| {
        let f = binomial(false, s)?;
        let base = f.problem(WassersteinOrder::infinite())?;
        let sol = solve_baseline(&base)?;
        let mut row = vec![s];
        for p in ps {
            row.push(optimizer_sensitivity(&base.with_order(order(p)?), &sol)?.0[0]);
        }
        Ok(row)
    })?;
    Ok(assemble(cols, rows))
}

/// Davis price sensitivity for g = x^3 in the binomial log model, next to the printed display.
fn fig3_right() -> Result<ResultTable> {
    let ps = [f64::INFINITY, 2.0, 1.5];
    let grid = linear(0.05, 3.0, 0.05);
    let mut cols = vec!["sharpe".to_string()];
    for p in ps {
        cols.push(format!("davis_prime0_p_{}", label(p)));
        cols.push(format!("davis_prime0_p_{}_printed", label(p)));
    }
    let g = Payoff::Power { k: 3 };
    let rows = rows(&grid, |s| {
        let f = binomial(false, s)?;
        let base = f.problem(WassersteinOrder::infinite())?;
        let sol = solve_baseline(&base)?;
        let mut row = vec![s];
        for p in ps {
            let o = order(p)?;
            row.push(davis_sensitivity(&base.with_order(o), &sol, &g)?);
            row.push(f.davis_prime0_cubic_printed(o.q()).unwrap_or(f64::NAN));
        }
        Ok(row)
    })?;
    Ok(assemble(cols, rows))
}

/// pi*'(0) for the capped exponential on N(mu, 1) with gamma = 1: module value,
/// the closed form it should match, and the printed limit.
fn fig4() -> Result<ResultTable> {
    let ps = [f64::INFINITY, 4.0, 2.0, 1.5];
    let grid = linear(0.1, 2.0, 0.1);
    let mut cols = vec!["sharpe".to_string()];
    for p in ps {
        let l = label(p);
        cols.extend([format!("pi_prime0_p_{l}"), format!("pi_prime0_p_{l}_derived"), format!("pi_prime0_p_{l}_printed")]);
    }
    let rows = rows(&grid, |mu| {
        let f = fixture(FixtureSpec::CappedExpLimit {
            mu,
            sigma: 1.0,
            gamma: 1.0,
            kappa: DEFAULT_KAPPA,
            n_nodes: DEFAULT_NODES,
        })?;
        let base = f.problem(WassersteinOrder::infinite())?;
        let sol = solve_baseline(&base)?;
        let mut row = vec![mu];
        for p in ps {
            let o = order(p)?;
            row.push(optimizer_sensitivity(&base.with_order(o), &sol)?.0[0]);
            row.push(f.pi_prime0(o.q()).unwrap_or(f64::NAN));
            row.push(f.pi_prime0_printed(o.q()).unwrap_or(f64::NAN));
        }
        Ok(row)
    })?;
    Ok(assemble(cols, rows))
}
