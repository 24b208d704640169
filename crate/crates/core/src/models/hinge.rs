//! L2-regularized hinge-loss linear classifier.
//!
//! Minimizes `(l2/2) ||(w, b)||^2 + mean_i max(0, 1 - y_i (w.z_i + b))` by dual
//! coordinate descent. The bias is handled as an appended constant feature and
//! is therefore penalized together with every other weight. Convergence is the
//! spread of the projected dual gradient falling below the configured tolerance.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::TrainConfig;
use crate::error::{Error, Result};

pub(crate) fn fit(rows: &[Vec<f64>], labels: &[i8], cfg: &TrainConfig) -> Result<Vec<f64>> {
    let n = rows.len();
    let k = rows[0].len() + 1;
    let z: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let mut v = r.clone();
            v.push(1.0);
            v
        })
        .collect();
    let y: Vec<f64> = labels.iter().map(|&v| v as f64).collect();
    let upper = 1.0 / (cfg.l2_penalty * n as f64);
    let diag: Vec<f64> = z.iter().map(|v| v.iter().map(|a| a * a).sum()).collect();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; k];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut spread = f64::INFINITY;
    for _ in 0..cfg.max_iterations {
        order.shuffle(&mut rng);
        let mut pg_max = f64::NEG_INFINITY;
        let mut pg_min = f64::INFINITY;
        for &i in &order {
            let margin: f64 = w.iter().zip(&z[i]).map(|(a, b)| a * b).sum();
            let g = y[i] * margin - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= upper {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / diag[i]).clamp(0.0, upper);
                let step = (alpha[i] - old) * y[i];
                for (wj, zj) in w.iter_mut().zip(&z[i]) {
                    *wj += step * zj;
                }
            }
        }
        spread = pg_max - pg_min;
        if spread <= cfg.gradient_tolerance {
            return Ok(w);
        }
    }
    Err(Error::NonConvergence { iterations: cfg.max_iterations, gradient_norm: spread })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Loss;

    fn cfg(l2: f64) -> TrainConfig {
        TrainConfig::default().with_loss(Loss::Hinge).with_l2(l2)
    }

    #[test]
    fn separates_easy_data() {
        let rows = vec![vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]];
        let w = fit(&rows, &[-1, -1, 1, 1], &cfg(1e-2)).unwrap();
        for (r, y) in rows.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!(y * (w[0] * r[0] + w[1]) > 0.0);
        }
    }

    #[test]
    fn primal_kkt_holds() {
        // At the optimum, w = sum_i alpha_i y_i z_i with alpha in [0, C]; check the
        // subgradient condition directly on the primal.
        let rows = vec![vec![-1.0, 0.5], vec![0.2, -0.3], vec![0.8, 1.0], vec![1.5, -0.2], vec![-0.4, -1.0]];
        let labels = [-1, 1, 1, -1, 1];
        let l2 = 0.1;
        let w = fit(&rows, &labels, &cfg(l2)).unwrap();
        let n = rows.len() as f64;
        let obj = |w: &[f64]| {
            let reg: f64 = w.iter().map(|v| v * v).sum::<f64>() * l2 / 2.0;
            let loss: f64 = rows
                .iter()
                .zip(&labels)
                .map(|(r, &y)| (1.0 - y as f64 * (w[0] * r[0] + w[1] * r[1] + w[2])).max(0.0))
                .sum();
            reg + loss / n
        };
        let base = obj(&w);
        for j in 0..3 {
            for s in [-1e-4, 1e-4] {
                let mut v = w.clone();
                v[j] += s;
                assert!(obj(&v) >= base - 1e-9);
            }
        }
    }
}
