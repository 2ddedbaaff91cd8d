//! Gauss rules rescaled to probability weights.

use std::num::NonZeroUsize;

use gauss_quad::{GaussHermite, GaussLegendre};

use crate::error::{invalid, Result};

fn degree(n: usize) -> Result<NonZeroUsize> {
    if n < 2 {
        return Err(invalid(format!("need at least 2 quadrature nodes, got {n}")));
    }
    Ok(NonZeroUsize::new(n).unwrap())
}

/// Nodes and weights for E[f(Z)], Z ~ N(0,1). Weights sum to one.
pub fn standard_normal(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let rule = GaussHermite::new(degree(n)?);
    let s2 = std::f64::consts::SQRT_2;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &(t, _) in rule.as_node_weight_pairs() {
        let x = polish_node(s2 * t, n);
        nodes.push(x);
        weights.push(christoffel_weight(x, n));
    }
    normalize(&mut weights);
    sort_pairs(&mut nodes, &mut weights);
    Ok((nodes, weights))
}

/// Gauss-Legendre nodes on [a, b] with weights proportional to `density`, normalized.
pub fn weighted_legendre(
    n: usize,
    a: f64,
    b: f64,
    density: impl Fn(f64) -> f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(invalid(format!("bad interval [{a}, {b}]")));
    }
    let rule = GaussLegendre::new(degree(n)?);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &(t, w) in rule.as_node_weight_pairs() {
        let x = mid + half * t;
        nodes.push(x);
        weights.push(w * half * density(x));
    }
    normalize(&mut weights);
    sort_pairs(&mut nodes, &mut weights);
    Ok((nodes, weights))
}

/// Orthonormal Hermite values (p_{n-1}(x), p_n(x)) for the standard normal weight,
/// plus the sum of squares of p_0..p_{n-1}.
fn hermite(x: f64, n: usize) -> (f64, f64, f64) {
    let (mut prev, mut cur) = (0.0, 1.0);
    let mut sumsq = 0.0;
    for k in 0..n {
        sumsq += cur * cur;
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    (prev, cur, sumsq)
}

// The library's tail weights lose relative accuracy for large n; the recurrence keeps it.
fn polish_node(mut x: f64, n: usize) -> f64 {
    for _ in 0..3 {
        let (pm, p, _) = hermite(x, n);
        let dp = (n as f64).sqrt() * pm;
        if dp == 0.0 {
            break;
        }
        x -= p / dp;
    }
    x
}

fn christoffel_weight(x: f64, n: usize) -> f64 {
    1.0 / hermite(x, n).2
}

fn normalize(w: &mut [f64]) {
    let s: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= s;
    }
}

fn sort_pairs(x: &mut Vec<f64>, w: &mut Vec<f64>) {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    *x = idx.iter().map(|&i| x[i]).collect();
    *w = idx.iter().map(|&i| w[i]).collect();
}
