#![allow(dead_code)]

pub mod chains;
pub mod compat_cases;

use mgm::model::{conditional_loglik_gradient, regressor_node};
use mgm::{Conditional, Dataset, NeighborhoodFit, NodeType};
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};

/// One random value from the support of `kind`.
pub fn draw_value<R: Rng>(kind: NodeType, rng: &mut R) -> f64 {
    match kind {
        NodeType::Gaussian => Normal::new(0.0, 1.0).unwrap().sample(rng),
        NodeType::Bernoulli => {
            if rng.random_bool(0.5) {
                1.0
            } else {
                -1.0
            }
        }
        NodeType::Poisson => Poisson::new(1.5).unwrap().sample(rng),
        NodeType::Exponential => Exp::new(1.0).unwrap().sample(rng) + 1e-3,
    }
}

pub fn random_dataset<R: Rng>(rng: &mut R, types: &[NodeType], n: usize) -> Dataset {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| types.iter().map(|&k| draw_value(k, rng)).collect())
        .collect();
    Dataset::from_rows(&rows, types.to_vec()).unwrap()
}

pub fn random_types<R: Rng>(rng: &mut R, p: usize) -> Vec<NodeType> {
    (0..p)
        .map(|_| NodeType::ALL[rng.random_range(0..NodeType::ALL.len())])
        .collect()
}

/// Cyclic coordinate descent for
/// `(1/2n) sum_i (y_i - a - x_i b)^2 + lambda sum_k w_k |b_k|`.
pub fn cd_lasso(x: &[Vec<f64>], y: &[f64], w: &[f64], lambda: f64) -> (Vec<f64>, f64) {
    let n = y.len();
    let d = w.len();
    let nf = n as f64;
    let mut b = vec![0.0; d];
    let mut a = y.iter().sum::<f64>() / nf;
    let mut resid: Vec<f64> = y.iter().map(|v| v - a).collect();
    let sq: Vec<f64> = (0..d)
        .map(|k| x.iter().map(|r| r[k] * r[k]).sum::<f64>() / nf)
        .collect();
    for _ in 0..200_000 {
        let mut change: f64 = 0.0;
        for k in 0..d {
            if sq[k] == 0.0 {
                continue;
            }
            let rho: f64 = (0..n).map(|i| x[i][k] * (resid[i] + x[i][k] * b[k])).sum::<f64>() / nf;
            let t = lambda * w[k];
            let new = if rho > t {
                (rho - t) / sq[k]
            } else if rho < -t {
                (rho + t) / sq[k]
            } else {
                0.0
            };
            let delta = new - b[k];
            if delta != 0.0 {
                for i in 0..n {
                    resid[i] -= x[i][k] * delta;
                }
                b[k] = new;
            }
            change = change.max(delta.abs());
        }
        let shift = resid.iter().sum::<f64>() / nf;
        a += shift;
        resid.iter_mut().for_each(|r| *r -= shift);
        change = change.max(shift.abs());
        if change < 1e-14 {
            break;
        }
    }
    (b, a)
}

/// Design rows (x_{-s}) and response column for node s.
pub fn design(data: &Dataset, s: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let p = data.p();
    let x = (0..data.n())
        .map(|i| (0..p - 1).map(|k| data.get(i, regressor_node(s, k))).collect())
        .collect();
    let y = (0..data.n()).map(|i| data.get(i, s)).collect();
    (x, y)
}

/// Sample standard deviations of the regressors of node s.
pub fn sample_sds(data: &Dataset, s: usize) -> Vec<f64> {
    let (x, _) = design(data, s);
    let n = x.len() as f64;
    (0..data.p() - 1)
        .map(|k| {
            let mean = x.iter().map(|r| r[k]).sum::<f64>() / n;
            (x.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        })
        .collect()
}

/// Worst KKT violation of a fit, from the log-likelihood gradient.
pub fn kkt_violation(fit: &NeighborhoodFit, data: &Dataset, cond: Conditional, weights: &[f64]) -> f64 {
    let g: Vec<f64> = conditional_loglik_gradient(cond, &fit.theta_hat, fit.alpha1_hat, data, fit.s)
        .unwrap()
        .iter()
        .map(|v| -v)
        .collect();
    let d = fit.theta_hat.len();
    let mut worst = g[d].abs();
    for k in 0..d {
        if weights[k] >= mgm::fit::EXCLUDED_WEIGHT {
            continue;
        }
        let t = fit.lambda * weights[k];
        let v = if fit.theta_hat[k] == 0.0 {
            (g[k].abs() - t).max(0.0)
        } else {
            (g[k] + t * fit.theta_hat[k].signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Relative error with an absolute floor for values near zero.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-3)
}
