//! l1-penalized node-conditional regressions and BIC tuning.
//!
//! Each node s is regressed on all other nodes by minimising
//! `-l_s(theta, alpha1) + lambda * sum_t w_t |theta_t|` with the intercept
//! unpenalized. The solver is accelerated proximal gradient with
//! backtracking and a monotone restart: an extrapolated step that would
//! raise the objective is discarded and replaced by a plain proximal step,
//! so accepted iterates never increase the objective. Backtracking also
//! rejects steps that leave the domain of D (Exponential nodes need
//! `eta < 0` on every row).

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{Conditional, NodeType};
use crate::model::{conditional_loglik, regressor_node, Dataset};

/// Weight assigned to a zero-variance regressor; its coefficient is pinned
/// at zero.
pub const EXCLUDED_WEIGHT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaGrid {
    /// Strictly positive, strictly descending values.
    Explicit(Vec<f64>),
    /// `n_lambdas` log-spaced values from lambda_max down to
    /// `ratio_min * lambda_max`.
    LogSpaced { n_lambdas: usize, ratio_min: f64 },
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid::LogSpaced {
            n_lambdas: 50,
            ratio_min: 0.01,
        }
    }
}

impl LambdaGrid {
    pub fn validate(&self) -> Result<()> {
        match self {
            LambdaGrid::Explicit(values) => {
                if values.is_empty() {
                    return Err(Error::InvalidConfig("lambda grid is empty".into()));
                }
                if values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                    return Err(Error::InvalidConfig("lambda grid must be strictly positive".into()));
                }
                if values.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(Error::InvalidConfig(
                        "lambda grid must be strictly descending".into(),
                    ));
                }
            }
            LambdaGrid::LogSpaced {
                n_lambdas,
                ratio_min,
            } => {
                if *n_lambdas == 0 || !(*ratio_min > 0.0 && *ratio_min < 1.0) {
                    return Err(Error::InvalidConfig(
                        "log-spaced grid needs n_lambdas >= 1 and 0 < ratio_min < 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Concrete grid given the largest useful lambda.
    pub fn resolve(&self, lambda_max: f64) -> Vec<f64> {
        match self {
            LambdaGrid::Explicit(values) => values.clone(),
            LambdaGrid::LogSpaced {
                n_lambdas,
                ratio_min,
            } => log_spaced(lambda_max, *ratio_min, *n_lambdas),
        }
    }
}

/// `count` log-spaced values from `top` down to `ratio * top`.
pub fn log_spaced(top: f64, ratio: f64, count: usize) -> Vec<f64> {
    let top = if top > 0.0 { top } else { 1.0 };
    if count == 1 {
        return vec![top];
    }
    let step = ratio.ln() / (count - 1) as f64;
    (0..count).map(|k| top * (step * k as f64).exp()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub lambda_grid: LambdaGrid,
    /// Penalise `|theta_t|` by the empirical standard deviation of column t.
    pub weighted: bool,
    /// KKT residual tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Backtracking factor applied to the step size, in (0, 1).
    pub step_shrink: f64,
    /// Known quadratic coefficient of Gaussian nodes.
    pub gaussian_alpha2: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lambda_grid: LambdaGrid::default(),
            weighted: true,
            tol: 1e-6,
            max_iter: 10_000,
            step_shrink: 0.5,
            gaussian_alpha2: -1.0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.lambda_grid.validate()?;
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidConfig("tol must be positive and max_iter >= 1".into()));
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return Err(Error::InvalidConfig("step_shrink must lie in (0, 1)".into()));
        }
        if !(self.gaussian_alpha2 < 0.0) {
            return Err(Error::InvalidConfig("gaussian_alpha2 must be negative".into()));
        }
        Ok(())
    }

    pub fn conditional(&self, kind: NodeType) -> Conditional {
        match kind {
            NodeType::Gaussian => Conditional::new(kind, self.gaussian_alpha2),
            _ => Conditional::standard(kind),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodFit {
    pub s: usize,
    /// Coefficients on the other nodes in ascending node order.
    pub theta_hat: Vec<f64>,
    pub alpha1_hat: f64,
    pub lambda: f64,
    /// Penalised objective at the returned point.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Nodes whose column had zero variance and were held at zero.
    pub excluded: Vec<usize>,
}

impl NeighborhoodFit {
    pub fn support_size(&self) -> usize {
        self.theta_hat.iter().filter(|&&v| v != 0.0).count()
    }

    /// Coefficient on node t (zero for t == s).
    pub fn coefficient(&self, t: usize) -> f64 {
        crate::model::regressor_position(self.s, t).map_or(0.0, |k| self.theta_hat[k])
    }
}

/// Warm start for [`fit_node`].
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    pub theta: Vec<f64>,
    pub alpha1: f64,
}

impl From<&NeighborhoodFit> for WarmStart {
    fn from(fit: &NeighborhoodFit) -> Self {
        Self {
            theta: fit.theta_hat.clone(),
            alpha1: fit.alpha1_hat,
        }
    }
}

/// Per-regressor empirical standard deviations (denominator n - 1).
/// Constant columns receive [`EXCLUDED_WEIGHT`].
pub fn penalty_weights(data: &Dataset, s: usize) -> Result<Vec<f64>> {
    if s >= data.p() {
        return Err(Error::IndexOutOfRange { index: s, p: data.p() });
    }
    let n = data.n();
    if n < 2 {
        return Err(Error::InvalidConfig("penalty weights need n >= 2".into()));
    }
    let x = data.matrix();
    Ok((0..data.p() - 1)
        .map(|k| {
            let col = x.column(regressor_node(s, k));
            let mean = col.mean();
            let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
            let sd = (ss / (n - 1) as f64).sqrt();
            if sd > 1e-12 * (1.0 + mean.abs()) {
                sd
            } else {
                EXCLUDED_WEIGHT
            }
        })
        .collect())
}

/// Node-s regression problem with cached design.
struct NodeProblem {
    cond: Conditional,
    y: DVector<f64>,
    design: DMatrix<f64>,
    weights: Vec<f64>,
    base_mean: f64,
    n: f64,
}

impl NodeProblem {
    fn new(data: &Dataset, s: usize, config: &FitConfig) -> Result<Self> {
        if s >= data.p() {
            return Err(Error::IndexOutOfRange { index: s, p: data.p() });
        }
        if data.n() == 0 {
            return Err(Error::InvalidConfig("cannot fit an empty dataset".into()));
        }
        let cond = config.conditional(data.types()[s]);
        let y = data.column(s);
        let weights = if config.weighted {
            penalty_weights(data, s)?
        } else {
            let mut w = vec![1.0; data.p() - 1];
            // Constant columns are still pinned to zero in the unweighted fit.
            if data.n() >= 2 {
                for (wk, pw) in w.iter_mut().zip(penalty_weights(data, s)?) {
                    if pw == EXCLUDED_WEIGHT {
                        *wk = EXCLUDED_WEIGHT;
                    }
                }
            }
            w
        };
        let n = data.n() as f64;
        let base_mean = y.iter().map(|&v| cond.base_measure(v)).sum::<f64>() / n;
        Ok(Self {
            cond,
            y,
            design: data.regressors(s),
            weights,
            base_mean,
            n,
        })
    }

    fn dim(&self) -> usize {
        self.design.ncols()
    }

    fn eta(&self, theta: &DVector<f64>, alpha: f64) -> DVector<f64> {
        let mut eta = &self.design * theta;
        eta.add_scalar_mut(alpha);
        eta
    }

    /// Negative average log-likelihood, or None outside the domain of D.
    fn loss(&self, eta: &DVector<f64>) -> Option<f64> {
        let mut total = 0.0;
        for (&e, &y) in eta.iter().zip(self.y.iter()) {
            if !self.cond.is_feasible(e) {
                return None;
            }
            total += e * y - self.cond.log_partition(e).ok()?;
        }
        let value = -(self.base_mean + total / self.n);
        value.is_finite().then_some(value)
    }

    /// Gradient of the loss: (theta part, intercept part).
    fn gradient(&self, eta: &DVector<f64>) -> (DVector<f64>, f64) {
        let resid = DVector::from_iterator(
            eta.len(),
            eta.iter()
                .zip(self.y.iter())
                .map(|(&e, &y)| (self.cond.mean_unchecked(e) - y) / self.n),
        );
        (self.design.tr_mul(&resid), resid.sum())
    }

    /// `loss(eta + h) - loss(eta)`, summed termwise.
    fn loss_change(&self, eta: &DVector<f64>, h: &DVector<f64>) -> f64 {
        let total: f64 = eta
            .iter()
            .zip(h.iter())
            .zip(self.y.iter())
            .map(|((&b, &h), &y)| self.cond.log_partition_step(b, h) - h * y)
            .sum();
        total / self.n
    }

    /// `loss(eta + h) - loss(eta)` minus its linearisation at eta.
    fn loss_remainder(&self, eta: &DVector<f64>, h: &DVector<f64>) -> f64 {
        let total: f64 = eta.iter().zip(h.iter()).map(|(&b, &h)| self.cond.bregman(b, h)).sum();
        total / self.n
    }

    /// `penalty(new) - penalty(old)`, termwise.
    fn penalty_change(&self, new: &DVector<f64>, old: &DVector<f64>, lambda: f64) -> f64 {
        lambda
            * new
                .iter()
                .zip(old.iter())
                .zip(&self.weights)
                .map(|((a, b), w)| if *w >= EXCLUDED_WEIGHT { 0.0 } else { w * (a.abs() - b.abs()) })
                .sum::<f64>()
    }

    fn penalty(&self, theta: &DVector<f64>, lambda: f64) -> f64 {
        lambda
            * theta
                .iter()
                .zip(&self.weights)
                .map(|(t, w)| if *w >= EXCLUDED_WEIGHT { 0.0 } else { w * t.abs() })
                .sum::<f64>()
    }

    fn intercept_mle(&self) -> f64 {
        self.cond.inverse_mean(self.y.mean())
    }
}

/// KKT residual of the penalised problem given the gradient of the loss
/// `-l_s` (theta part followed by the intercept).
pub fn kkt_residual(loss_grad: &[f64], theta: &[f64], lambda: f64, weights: &[f64]) -> f64 {
    let d = theta.len();
    assert_eq!(loss_grad.len(), d + 1);
    let mut worst = loss_grad[d].abs();
    for k in 0..d {
        let g = loss_grad[k];
        let bound = lambda * weights[k];
        let r = if theta[k] == 0.0 {
            (g.abs() - bound).max(0.0)
        } else {
            (g + bound * theta[k].signum()).abs()
        };
        worst = worst.max(r);
    }
    worst
}

fn soft_threshold(z: f64, thresh: f64) -> f64 {
    if z > thresh {
        z - thresh
    } else if z < -thresh {
        z + thresh
    } else {
        0.0
    }
}

struct Iterate {
    theta: DVector<f64>,
    alpha: f64,
    eta: DVector<f64>,
    loss: f64,
}

impl Iterate {
    fn at(problem: &NodeProblem, theta: DVector<f64>, alpha: f64) -> Option<Self> {
        let eta = problem.eta(&theta, alpha);
        let loss = problem.loss(&eta)?;
        Some(Self {
            theta,
            alpha,
            eta,
            loss,
        })
    }
}

fn kkt_of(problem: &NodeProblem, it: &Iterate, lambda: f64) -> f64 {
    let (g, ga) = problem.gradient(&it.eta);
    let mut grad: Vec<f64> = g.iter().copied().collect();
    grad.push(ga);
    kkt_residual(&grad, it.theta.as_slice(), lambda, &problem.weights)
}

fn solve(
    problem: &NodeProblem,
    s: usize,
    lambda: f64,
    config: &FitConfig,
    warm_start: Option<&WarmStart>,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<NeighborhoodFit> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidConfig(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let d = problem.dim();
    let excluded: Vec<bool> = problem.weights.iter().map(|&w| w >= EXCLUDED_WEIGHT).collect();

    let cold = || Iterate::at(problem, DVector::zeros(d), problem.intercept_mle());
    let start = warm_start
        .filter(|w| w.theta.len() == d)
        .and_then(|w| {
            let mut theta = DVector::from_column_slice(&w.theta);
            for k in 0..d {
                if excluded[k] {
                    theta[k] = 0.0;
                }
            }
            Iterate::at(problem, theta, w.alpha1)
        })
        .or_else(cold);
    let mut x = start.ok_or(Error::Domain {
        kind: problem.cond.kind,
        eta: problem.intercept_mle(),
    })?;
    let mut f_x = x.loss + problem.penalty(&x.theta, lambda);
    if let Some(tr) = trace.as_deref_mut() {
        tr.push(f_x);
    }

    let mut y_theta = x.theta.clone();
    let mut y_alpha = x.alpha;
    let mut momentum = 1.0_f64;
    let mut step = 1.0_f64;
    let mut converged = kkt_of(problem, &x, lambda) <= config.tol;
    let mut iterations = 0;

    while !converged && iterations < config.max_iter {
        iterations += 1;
        let y = match Iterate::at(problem, y_theta.clone(), y_alpha) {
            Some(y) => y,
            None => {
                // Extrapolation left the domain: restart from the last iterate.
                y_theta = x.theta.clone();
                y_alpha = x.alpha;
                momentum = 1.0;
                Iterate::at(problem, y_theta.clone(), y_alpha).expect("accepted iterate is feasible")
            }
        };
        let (g_theta, g_alpha) = problem.gradient(&y.eta);

        // Backtracking on the quadratic upper bound.
        let candidate = loop {
            let mut theta = DVector::zeros(d);
            for k in 0..d {
                if !excluded[k] {
                    theta[k] = soft_threshold(
                        y.theta[k] - step * g_theta[k],
                        step * lambda * problem.weights[k],
                    );
                }
            }
            let alpha = y.alpha - step * g_alpha;
            if let Some(z) = Iterate::at(problem, theta, alpha) {
                let diff_theta = &z.theta - &y.theta;
                let diff_alpha = z.alpha - y.alpha;
                let sq = diff_theta.norm_squared() + diff_alpha * diff_alpha;
                // The step in eta comes from the parameter step, not eta(z) - eta(y).
                let h = problem.eta(&diff_theta, diff_alpha);
                if problem.loss_remainder(&y.eta, &h) <= sq / (2.0 * step) * (1.0 + 1e-10) {
                    break Some(z);
                }
            }
            step *= config.step_shrink;
            if step < 1e-20 {
                break None;
            }
        };
        let Some(z) = candidate else { break };
        let h = problem.eta(&(&z.theta - &x.theta), z.alpha - x.alpha);
        let change = problem.loss_change(&x.eta, &h) + problem.penalty_change(&z.theta, &x.theta, lambda);
        let f_z = z.loss + problem.penalty(&z.theta, lambda);

        if change > 0.0 {
            let from_x = y.theta == x.theta && y.alpha == x.alpha;
            if from_x {
                // A plain proximal step could not improve: numerical floor.
                converged = kkt_of(problem, &x, lambda) <= config.tol;
                break;
            }
            y_theta = x.theta.clone();
            y_alpha = x.alpha;
            momentum = 1.0;
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(f_x);
            }
            continue;
        }

        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / next_momentum;
        y_theta = &z.theta + (&z.theta - &x.theta) * beta;
        y_alpha = z.alpha + beta * (z.alpha - x.alpha);
        momentum = next_momentum;
        x = z;
        f_x = f_z;
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(f_x);
        }
        converged = kkt_of(problem, &x, lambda) <= config.tol;
        // Let the step grow again after a run of short steps.
        step /= config.step_shrink.sqrt();
    }

    let excluded_nodes = excluded
        .iter()
        .enumerate()
        .filter(|(_, &e)| e)
        .map(|(k, _)| regressor_node(s, k))
        .collect();
    Ok(NeighborhoodFit {
        s,
        theta_hat: x.theta.iter().copied().collect(),
        alpha1_hat: x.alpha,
        lambda,
        objective: f_x,
        iterations,
        converged,
        excluded: excluded_nodes,
    })
}

/// Solves the penalised node-conditional problem for node s at one lambda.
///
/// Without a warm start the solver begins at `theta = 0` with the
/// intercept-only maximum likelihood estimate, which is always inside the
/// domain of D. Non-convergence is reported through `converged = false`.
pub fn fit_node(
    data: &Dataset,
    s: usize,
    lambda: f64,
    config: &FitConfig,
    warm_start: Option<&WarmStart>,
) -> Result<NeighborhoodFit> {
    let problem = NodeProblem::new(data, s, config)?;
    solve(&problem, s, lambda, config, warm_start, None)
}

/// Like [`fit_node`] but also returns the penalised objective after every
/// solver iteration (starting point first).
pub fn fit_node_traced(
    data: &Dataset,
    s: usize,
    lambda: f64,
    config: &FitConfig,
    warm_start: Option<&WarmStart>,
) -> Result<(NeighborhoodFit, Vec<f64>)> {
    let problem = NodeProblem::new(data, s, config)?;
    let mut trace = Vec::new();
    let fit = solve(&problem, s, lambda, config, warm_start, Some(&mut trace))?;
    Ok((fit, trace))
}

/// Smallest lambda at which the all-zero coefficient vector is optimal.
pub fn lambda_max(data: &Dataset, s: usize, weighted: bool) -> Result<f64> {
    let config = FitConfig {
        weighted,
        ..FitConfig::default()
    };
    lambda_max_with(data, s, &config)
}

pub fn lambda_max_with(data: &Dataset, s: usize, config: &FitConfig) -> Result<f64> {
    let problem = NodeProblem::new(data, s, config)?;
    let alpha = problem.intercept_mle();
    let eta = problem.eta(&DVector::zeros(problem.dim()), alpha);
    let (g, _) = problem.gradient(&eta);
    Ok(g.iter()
        .zip(&problem.weights)
        .filter(|(_, &w)| w < EXCLUDED_WEIGHT)
        .map(|(gk, w)| gk.abs() / w)
        .fold(0.0, f64::max))
}

/// `-2n l_s(theta_hat, alpha1_hat) + log(n) * ||theta_hat||_0`.
pub fn bic(fit: &NeighborhoodFit, data: &Dataset, cond: Conditional) -> Result<f64> {
    let n = data.n() as f64;
    let ll = conditional_loglik(cond, &fit.theta_hat, fit.alpha1_hat, data, fit.s)?;
    Ok(-2.0 * n * ll + n.ln() * fit.support_size() as f64)
}

/// Nodes with a nonzero coefficient.
pub fn estimated_neighborhood(fit: &NeighborhoodFit) -> BTreeSet<usize> {
    fit.theta_hat
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(k, _)| regressor_node(fit.s, k))
        .collect()
}

/// Neighbourhood sets indexed by node; nodes without a fit get an empty set.
pub fn neighborhoods(fits: &[NeighborhoodFit], p: usize) -> Vec<BTreeSet<usize>> {
    let mut out = vec![BTreeSet::new(); p];
    for fit in fits {
        out[fit.s] = estimated_neighborhood(fit);
    }
    out
}

/// Warm-started fits of node s along a descending lambda sequence.
pub fn fit_path(
    data: &Dataset,
    s: usize,
    lambdas: &[f64],
    config: &FitConfig,
) -> Result<Vec<NeighborhoodFit>> {
    let problem = NodeProblem::new(data, s, config)?;
    let mut fits: Vec<NeighborhoodFit> = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let warm = fits.last().map(WarmStart::from);
        fits.push(solve(&problem, s, lambda, config, warm.as_ref(), None)?);
    }
    Ok(fits)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodePath {
    pub s: usize,
    pub lambdas: Vec<f64>,
    pub fits: Vec<NeighborhoodFit>,
    pub bic: Vec<f64>,
}

/// Regularisation paths for every node. Nodes of the same type share one
/// lambda grid so their BIC values can be summed per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PathFit {
    pub types: Vec<NodeType>,
    pub grids: BTreeMap<NodeType, Vec<f64>>,
    pub nodes: Vec<NodePath>,
}

impl PathFit {
    /// node x lambda matrix of BIC values.
    pub fn bic_matrix(&self) -> Vec<Vec<f64>> {
        self.nodes.iter().map(|n| n.bic.clone()).collect()
    }

    /// Fits at the chosen grid index per node type.
    pub fn fits_at(&self, choice: &BTreeMap<NodeType, LambdaChoice>) -> Vec<NeighborhoodFit> {
        self.nodes
            .iter()
            .map(|node| node.fits[choice[&self.types[node.s]].index].clone())
            .collect()
    }
}

/// Shared lambda grid per node type: resolved from the largest
/// lambda_max among that type's nodes.
pub fn type_grids(data: &Dataset, config: &FitConfig) -> Result<BTreeMap<NodeType, Vec<f64>>> {
    let lmax: Vec<f64> = (0..data.p())
        .into_par_iter()
        .map(|s| lambda_max_with(data, s, config))
        .collect::<Result<_>>()?;
    let mut grids = BTreeMap::new();
    for kind in NodeType::ALL {
        let top = data
            .types()
            .iter()
            .zip(&lmax)
            .filter(|(k, _)| **k == kind)
            .map(|(_, &l)| l)
            .fold(None, |acc: Option<f64>, l| Some(acc.map_or(l, |a| a.max(l))));
        if let Some(top) = top {
            grids.insert(kind, config.lambda_grid.resolve(top));
        }
    }
    Ok(grids)
}

/// Fits every node along its type's grid (nodes in parallel) and records
/// each fit's BIC.
pub fn fit_all_paths(data: &Dataset, config: &FitConfig) -> Result<PathFit> {
    config.validate()?;
    let grids = type_grids(data, config)?;
    let types = data.types().to_vec();
    let nodes = (0..data.p())
        .into_par_iter()
        .map(|s| {
            let lambdas = grids[&types[s]].clone();
            let fits = fit_path(data, s, &lambdas, config)?;
            let cond = config.conditional(types[s]);
            let bic = fits
                .iter()
                .map(|f| bic(f, data, cond))
                .collect::<Result<Vec<_>>>()?;
            Ok(NodePath {
                s,
                lambdas,
                fits,
                bic,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PathFit {
        types,
        grids,
        nodes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaChoice {
    pub index: usize,
    pub lambda: f64,
    /// BIC summed over the type's nodes at this lambda.
    pub bic: f64,
}

/// Per node type, the grid value minimising the BIC summed over that
/// type's nodes. Ties go to the larger lambda.
pub fn select_lambda_by_type(path: &PathFit, types: &[NodeType]) -> BTreeMap<NodeType, LambdaChoice> {
    let mut out = BTreeMap::new();
    for (&kind, grid) in &path.grids {
        let members: Vec<&NodePath> = path.nodes.iter().filter(|n| types[n.s] == kind).collect();
        if members.is_empty() {
            continue;
        }
        let mut best: Option<LambdaChoice> = None;
        for (k, &lambda) in grid.iter().enumerate() {
            let total: f64 = members.iter().map(|n| n.bic[k]).sum();
            if best.is_none_or(|b| total < b.bic) {
                best = Some(LambdaChoice {
                    index: k,
                    lambda,
                    bic: total,
                });
            }
        }
        if let Some(b) = best {
            out.insert(kind, b);
        }
    }
    out
}

/// Fits every node at the lambda assigned to its type, in parallel.
pub fn fit_all_at(
    data: &Dataset,
    lambda_by_type: &BTreeMap<NodeType, f64>,
    config: &FitConfig,
) -> Result<Vec<NeighborhoodFit>> {
    (0..data.p())
        .into_par_iter()
        .map(|s| {
            let kind = data.types()[s];
            let lambda = *lambda_by_type.get(&kind).ok_or_else(|| {
                Error::InvalidConfig(format!("no lambda given for {kind} nodes"))
            })?;
            fit_node(data, s, lambda, config, None)
        })
        .collect()
}

/// Sweeps a common multiplier over per-type base lambdas, keeping their
/// ratio fixed. `scales` must be descending. Returns one fit vector per
/// scale, each indexed by node.
pub fn fit_scaled_sweep(
    data: &Dataset,
    base: &BTreeMap<NodeType, f64>,
    scales: &[f64],
    config: &FitConfig,
) -> Result<Vec<Vec<NeighborhoodFit>>> {
    let per_node: Vec<Vec<NeighborhoodFit>> = (0..data.p())
        .into_par_iter()
        .map(|s| {
            let kind = data.types()[s];
            let b = *base.get(&kind).ok_or_else(|| {
                Error::InvalidConfig(format!("no base lambda for {kind} nodes"))
            })?;
            let lambdas: Vec<f64> = scales.iter().map(|c| c * b).collect();
            fit_path(data, s, &lambdas, config)
        })
        .collect::<Result<_>>()?;
    Ok((0..scales.len())
        .map(|k| per_node.iter().map(|fits| fits[k].clone()).collect())
        .collect())
}
