//! Small numerical optimizers shared by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimization on [a, b]; returns (argmin, min).
pub fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            if fc < best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            if fd < best.1 {
                best = (d, fd);
            }
        }
    }
    for e in [a, b] {
        let fe = f(e);
        if fe < best.1 {
            best = (e, fe);
        }
    }
    best
}

/// Golden-section maximization on [a, b]; returns (argmax, max).
pub fn golden_max(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (x, v) = golden_min(|t| -f(t), a, b, tol);
    (x, -v)
}

/// Root of a nonincreasing function on [a, b] by bisection.
pub fn bisect_decreasing(mut g: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    for _ in 0..400 {
        if b - a <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        if g(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Objective for `newton_box`: value (-inf when infeasible), gradient and Hessian.
pub trait Concave {
    fn value(&self, x: &[f64]) -> f64;
    fn grad_hess(&self, x: &[f64]) -> (DVector<f64>, DMatrix<f64>);
}

#[derive(Debug, Clone)]
pub struct NewtonResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    /// Coordinates pinned at a bound with the gradient pointing outward.
    pub active: Vec<bool>,
    pub iterations: usize,
}

fn projected_grad(x: &[f64], g: &DVector<f64>, lo: &[f64], hi: &[f64]) -> (Vec<bool>, f64) {
    let mut active = vec![false; x.len()];
    let mut norm = 0.0f64;
    for i in 0..x.len() {
        let at_lo = x[i] <= lo[i] && g[i] < 0.0;
        let at_hi = x[i] >= hi[i] && g[i] > 0.0;
        active[i] = at_lo || at_hi;
        if !active[i] {
            norm = norm.max(g[i].abs());
        }
    }
    (active, norm)
}

/// Projected damped Newton ascent for a concave objective on a box.
pub fn newton_box(
    obj: &impl Concave,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<NewtonResult> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut f = obj.value(&x);
    if !f.is_finite() {
        return Err(Error::Numerical("starting point is infeasible".into()));
    }
    let mut small_steps = 0;
    for it in 0..max_iter {
        let (g, h) = obj.grad_hess(&x);
        let (active, pg) = projected_grad(&x, &g, lo, hi);
        let free: Vec<usize> = (0..n).filter(|&i| !active[i]).collect();
        if free.is_empty() || (pg <= tol && small_steps > 0) {
            return Ok(NewtonResult { x, value: f, grad: g.iter().copied().collect(), active, iterations: it });
        }
        let hf = DMatrix::from_fn(free.len(), free.len(), |r, c| h[(free[r], free[c])]);
        let gf = DVector::from_fn(free.len(), |r, _| g[free[r]]);
        let mut dir = match (-hf).cholesky() {
            Some(ch) => ch.solve(&gf),
            None => gf.clone(),
        };
        if dir.dot(&gf) <= 0.0 {
            dir = gf.clone();
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..80 {
            let mut xn = x.clone();
            for (k, &i) in free.iter().enumerate() {
                xn[i] = (x[i] + alpha * dir[k]).clamp(lo[i], hi[i]);
            }
            let fn_ = obj.value(&xn);
            if fn_.is_finite() {
                let gain: f64 = (0..n).map(|i| g[i] * (xn[i] - x[i])).sum();
                let near = pg <= 1e-7 && fn_ >= f - 1e-13 * f.abs().max(1.0);
                if fn_ >= f + 1e-4 * gain || near {
                    accepted = Some((xn, fn_));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            if pg <= tol.max(1e-9) {
                return Ok(NewtonResult { x, value: f, grad: g.iter().copied().collect(), active, iterations: it });
            }
            return Err(Error::NoConvergence(format!("line search failed at {x:?}, gradient {pg:e}")));
        };
        let step: f64 = xn.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = 1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if step <= 1e-15 * scale {
            small_steps += 1;
        }
        if pg <= tol {
            small_steps += 1;
        }
        x = xn;
        f = fnew;
    }
    Err(Error::NoConvergence(format!("Newton hit {max_iter} iterations at {x:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    struct Quad {
        c: Vec<f64>,
    }

    impl Concave for Quad {
        fn value(&self, x: &[f64]) -> f64 {
            -x.iter().zip(&self.c).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
        }
        fn grad_hess(&self, x: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
            let g = DVector::from_fn(x.len(), |i, _| -2.0 * (x[i] - self.c[i]));
            (g, DMatrix::from_diagonal_element(x.len(), x.len(), -2.0))
        }
    }

    #[test]
    fn golden_finds_minimum() {
        let (x, v) = golden_min(|t| (t - 0.3).powi(2) + 1.0, -2.0, 2.0, 1e-10);
        assert_abs_diff_eq!(x, 0.3, epsilon = 1e-8);
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-15);
        let (x, _) = golden_max(|t| -(t - 5.0).abs(), 0.0, 1.0, 1e-12);
        assert_abs_diff_eq!(x, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bisection_root() {
        let r = bisect_decreasing(|t| 2.0 - t * t, 0.0, 2.0, 1e-14);
        assert_abs_diff_eq!(r, 2f64.sqrt(), epsilon = 1e-13);
    }

    #[test]
    fn newton_interior_and_boundary() {
        let q = Quad { c: vec![0.5, 3.0] };
        let r = newton_box(&q, &[0.0, 0.0], &[-1.0, -1.0], &[1.0, 1.0], 1e-12, 50).unwrap();
        assert_abs_diff_eq!(r.x[0], 0.5, epsilon = 1e-14);
        assert_eq!(r.x[1], 1.0);
        assert_eq!(r.active, vec![false, true]);
    }
}
