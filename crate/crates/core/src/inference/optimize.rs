//! Quasi-Newton minimisation with finite-difference gradients.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub max_iterations: usize,
    pub gradient_tol: f64,
    pub step_tol: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions { max_iterations: 500, gradient_tol: 1e-6, step_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Five-point central-difference gradient.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Vec<f64> {
    let mut xp = x.to_vec();
    let mut at = |i: usize, v: f64| {
        xp[i] = v;
        let r = f(&xp);
        xp[i] = x[i];
        r
    };
    (0..x.len())
        .map(|i| {
            let h = 1e-3 * x[i].abs().max(1.0);
            let (p1, m1) = (at(i, x[i] + h), at(i, x[i] - h));
            let (p2, m2) = (at(i, x[i] + 2.0 * h), at(i, x[i] - 2.0 * h));
            (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h)
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

/// BFGS on the inverse Hessian with a backtracking Armijo line search.
/// Non-finite objective values are treated as +∞.
pub fn minimize_bfgs<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], opts: &OptimizerOptions) -> Minimum {
    let n = x0.len();
    let obj = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut x = x0.to_vec();
    let mut fx = obj(&x);
    let mut g = fd_gradient(&obj, &x);
    let mut h = identity(n);
    let mut iterations = 0;
    let mut fresh = true;
    while iterations < opts.max_iterations {
        if norm(&g) < opts.gradient_tol {
            break;
        }
        iterations += 1;
        let mut dir: Vec<f64> = (0..n).map(|i| -dot(&h[i], &g)).collect();
        if dot(&dir, &g) >= 0.0 {
            h = identity(n);
            dir = g.iter().map(|v| -v).collect();
        }
        // cap the first trial step in log-parameter space
        let len = norm(&dir);
        let mut alpha = if len > 2.0 { 2.0 / len } else { 1.0 };
        let slope = dot(&dir, &g);
        let mut accepted = None;
        while alpha * len > 1e-14 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + alpha * d).collect();
            let ft = obj(&trial);
            if ft <= fx + 1e-4 * alpha * slope {
                accepted = Some((trial, ft));
                break;
            }
            alpha *= 0.5;
        }
        if accepted.is_none() {
            // near the optimum the decrease falls below rounding in f; accept
            // the full step when f is flat to rounding and the gradient shrinks
            let a0 = if len > 2.0 { 2.0 / len } else { 1.0 };
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + a0 * d).collect();
            let ft = obj(&trial);
            if ft <= fx + 64.0 * f64::EPSILON * fx.abs().max(1.0) && norm(&fd_gradient(&obj, &trial)) < norm(&g) {
                accepted = Some((trial, ft));
            }
        }
        let Some((xn, fnew)) = accepted else {
            if fresh {
                break;
            }
            h = identity(n);
            fresh = true;
            continue;
        };
        let gn = fd_gradient(&obj, &xn);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if fresh {
                // scale the initial inverse Hessian
                let scale = sy / dot(&y, &y);
                h = identity(n).into_iter().map(|r| r.into_iter().map(|v| v * scale).collect()).collect();
            }
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| dot(&h[i], &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
            fresh = false;
        }
        let step = norm(&s);
        let was_fresh = fresh;
        x = xn;
        fx = fnew;
        g = gn;
        if step < opts.step_tol && norm(&g) >= opts.gradient_tol {
            // a stalled curvature model gets one restart from the identity
            if was_fresh {
                break;
            }
            h = identity(n);
            fresh = true;
        }
    }
    if norm(&g) >= opts.gradient_tol && fx.is_finite() {
        newton_polish(&obj, &mut x, &mut fx, &mut g, &mut iterations, opts);
    }
    let gradient_norm = norm(&g);
    Minimum { x, value: fx, gradient_norm, iterations, converged: gradient_norm < opts.gradient_tol }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k] == 0.0 || !a[p][k].is_finite() {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let m = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= m * a[k][j];
            }
            b[i] -= m * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}

/// Newton steps on a finite-difference Hessian once the objective is flat
/// to rounding. Steps are accepted while they shrink the gradient.
fn newton_polish<F: Fn(&[f64]) -> f64>(
    obj: &F,
    x: &mut Vec<f64>,
    fx: &mut f64,
    g: &mut Vec<f64>,
    iterations: &mut usize,
    opts: &OptimizerOptions,
) {
    let n = x.len();
    while *iterations < opts.max_iterations && norm(g) >= opts.gradient_tol {
        *iterations += 1;
        let mut hess = vec![vec![0.0; n]; n];
        for j in 0..n {
            let h = 1e-4 * x[j].abs().max(1.0);
            let mut xp = x.clone();
            xp[j] += h;
            let gp = fd_gradient(obj, &xp);
            xp[j] -= 2.0 * h;
            let gm = fd_gradient(obj, &xp);
            for i in 0..n {
                hess[i][j] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        for i in 0..n {
            for j in 0..i {
                let m = 0.5 * (hess[i][j] + hess[j][i]);
                hess[i][j] = m;
                hess[j][i] = m;
            }
        }
        let Some(dir) = solve(hess, g.iter().map(|v| -v).collect()) else { return };
        if dot(&dir, g) >= 0.0 {
            return;
        }
        let slack = 64.0 * f64::EPSILON * fx.abs().max(1.0);
        let mut alpha = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + alpha * d).collect();
            let ft = obj(&trial);
            if ft <= *fx + slack {
                let gt = fd_gradient(obj, &trial);
                if norm(&gt) < norm(g) {
                    break Some((trial, ft, gt));
                }
            }
            alpha *= 0.5;
            if alpha < 1e-3 {
                break None;
            }
        };
        let Some((xn, fnew, gn)) = accepted else { return };
        *x = xn;
        *fx = fnew;
        *g = gn;
    }
}
