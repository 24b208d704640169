//! Penalized logistic regression.
//!
//! Minimizes `J(w) = sum_i c_i log(1 + exp(-y_i w.z_i)) / sum_i c_i + (l2/2) sum_{j in P} w_j^2`
//! with damped Newton steps and an Armijo backtracking line search. Rows of
//! the design carry a trailing `1.0` for the intercept; `P` is the set of
//! penalized coordinates. Converged means `max_j |dJ/dw_j| <= tolerance`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Rows, `+-1` targets, non-negative row weights and the penalty mask.
#[derive(Clone, Debug)]
pub(crate) struct Design {
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub weights: Vec<f64>,
    pub penalized: Vec<bool>,
}

impl Design {
    pub fn dim(&self) -> usize {
        self.penalized.len()
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Fit {
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
}

/// `log(1 + exp(-m))`, stable for large `|m|`.
pub(crate) fn logistic_loss(margin: f64) -> f64 {
    if margin > 0.0 {
        (-margin).exp().ln_1p()
    } else {
        -margin + margin.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn objective(design: &Design, l2: f64, w: &[f64]) -> f64 {
    let total: f64 = design.weights.iter().sum();
    let mut loss = 0.0;
    for ((z, y), c) in design.rows.iter().zip(&design.targets).zip(&design.weights) {
        loss += c * logistic_loss(y * dot(z, w));
    }
    let pen: f64 = w
        .iter()
        .zip(&design.penalized)
        .filter(|(_, p)| **p)
        .map(|(v, _)| v * v)
        .sum();
    loss / total + 0.5 * l2 * pen
}

fn gradient_hessian(design: &Design, l2: f64, w: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let k = design.dim();
    let total: f64 = design.weights.iter().sum();
    let mut g = vec![0.0; k];
    let mut h = vec![vec![0.0; k]; k];
    for ((z, y), c) in design.rows.iter().zip(&design.targets).zip(&design.weights) {
        if *c == 0.0 {
            continue;
        }
        let m = y * dot(z, w);
        // d/dm log(1+e^-m) = -sigmoid(-m)
        let s = sigmoid(-m);
        let coef = -c * y * s / total;
        let curv = c * s * (1.0 - s) / total;
        for a in 0..k {
            g[a] += coef * z[a];
            let za = curv * z[a];
            if za != 0.0 {
                for b in a..k {
                    h[a][b] += za * z[b];
                }
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            h[a][b] = h[b][a];
        }
        if design.penalized[a] {
            g[a] += l2 * w[a];
            h[a][a] += l2;
        }
    }
    (g, h)
}

/// Solve `h x = rhs` by Cholesky; `None` when `h` is not numerically positive definite.
pub(crate) fn cholesky_solve(h: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let k = rhs.len();
    let m = DMatrix::from_fn(k, k, |i, j| h[i][j]);
    let chol = m.cholesky()?;
    let x = chol.solve(&DVector::from_column_slice(rhs));
    if x.iter().all(|v| v.is_finite()) {
        Some(x.iter().copied().collect())
    } else {
        None
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub(crate) fn fit(design: &Design, l2: f64, max_iterations: usize, tolerance: f64) -> Result<Fit> {
    let k = design.dim();
    let mut w = vec![0.0; k];
    let mut value = objective(design, l2, &w);
    let mut norm = f64::INFINITY;
    for iter in 0..max_iterations {
        let (g, mut h) = gradient_hessian(design, l2, &w);
        norm = max_abs(&g);
        if norm <= tolerance {
            return Ok(Fit { weights: w, iterations: iter, gradient_norm: norm });
        }
        let neg: Vec<f64> = g.iter().map(|x| -x).collect();
        let mut step = None;
        let mut jitter = 0.0;
        for _ in 0..8 {
            if let Some(s) = cholesky_solve(&h, &neg) {
                step = Some(s);
                break;
            }
            jitter = if jitter == 0.0 { 1e-10 } else { jitter * 100.0 };
            for (a, row) in h.iter_mut().enumerate() {
                row[a] += jitter;
            }
        }
        let mut newton = step.is_some();
        let mut dir = step.unwrap_or_else(|| neg.clone());
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            newton = false;
            dir = neg.clone();
            slope = dot(&g, &dir);
        }
        if newton && -slope <= 1e-12 * (1.0 + value.abs()) {
            // The predicted decrease is below the rounding error of the objective, so
            // Armijo comparisons are noise. Newton steps converge quadratically here.
            w.iter_mut().zip(&dir).for_each(|(a, b)| *a += b);
            value = objective(design, l2, &w);
            continue;
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = w.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
            let v = objective(design, l2, &cand);
            if v <= value + 1e-4 * t * slope {
                w = cand;
                value = v;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // Line search stalled at machine precision; accept if the gradient is tiny
            // relative to the data scale, otherwise report.
            let (g, _) = gradient_hessian(design, l2, &w);
            norm = max_abs(&g);
            if norm <= tolerance {
                return Ok(Fit { weights: w, iterations: iter + 1, gradient_norm: norm });
            }
            return Err(Error::NonConvergence { iterations: iter + 1, gradient_norm: norm });
        }
    }
    let (g, _) = gradient_hessian(design, l2, &w);
    norm = norm.min(max_abs(&g));
    if norm <= tolerance {
        return Ok(Fit { weights: w, iterations: max_iterations, gradient_norm: norm });
    }
    Err(Error::NonConvergence { iterations: max_iterations, gradient_norm: norm })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(xs: &[f64], ys: &[f64]) -> Design {
        Design {
            rows: xs.iter().map(|x| vec![*x, 1.0]).collect(),
            targets: ys.to_vec(),
            weights: vec![1.0; xs.len()],
            penalized: vec![true, false],
        }
    }

    #[test]
    fn loss_is_stable() {
        assert!((logistic_loss(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!(logistic_loss(800.0) >= 0.0 && logistic_loss(800.0) < 1e-300);
        assert!((logistic_loss(-800.0) - 800.0).abs() < 1e-9);
    }

    #[test]
    fn converges_on_overlapping_data() {
        let d = design(&[-2.0, -1.0, 0.0, 0.5, 1.0, 2.0, -0.5, 1.5], &[-1.0, -1.0, 1.0, -1.0, 1.0, 1.0, 1.0, -1.0]);
        let f = fit(&d, 0.0, 100, 1e-10).unwrap();
        assert!(f.gradient_norm <= 1e-10);
        assert!(f.weights[0] > 0.0);
    }

    #[test]
    fn finite_difference_gradient() {
        let d = design(&[-2.0, -1.0, 0.3, 0.5, 1.0], &[-1.0, 1.0, 1.0, -1.0, 1.0]);
        let w = [0.7, -0.2];
        let (g, _) = gradient_hessian(&d, 0.3, &w);
        for j in 0..2 {
            let h = 1e-6;
            let mut a = w;
            let mut b = w;
            a[j] += h;
            b[j] -= h;
            let fd = (objective(&d, 0.3, &a) - objective(&d, 0.3, &b)) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-8, "coord {j}: {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn iteration_cap_reports_gradient() {
        let d = design(&[-2.0, -1.0, 0.0, 0.5, 1.0], &[-1.0, 1.0, 1.0, -1.0, 1.0]);
        match fit(&d, 0.0, 1, 1e-14) {
            Err(Error::NonConvergence { iterations, gradient_norm }) => {
                assert_eq!(iterations, 1);
                assert!(gradient_norm > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
