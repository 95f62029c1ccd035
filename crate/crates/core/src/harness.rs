//! Desk-scale simulation studies.
//!
//! * Recovery curves: exact-match recovery rate of each subgraph as the
//!   sample size grows, with `lambda = c * sqrt(log p / n)`.
//! * Edge-count comparison: correct versus estimated edges along a lambda
//!   sweep for each combiner.
//! * BIC point: precision and recall of BIC-tuned fits.
//!
//! Replicates run in parallel; each job draws its randomness from a seed
//! derived from `(seed, job indices)` so results do not depend on
//! scheduling.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use log::{info, warn};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combine::{
    combine_and, combine_or, combine_with_selection_rules, estimate_bounds, true_bounds,
    BoundEstimates, EdgeSet, Fallback,
};
use crate::error::{Error, Result};
use crate::family::{Conditional, NodeType};
use crate::fit::{
    fit_all_at, fit_all_paths, fit_scaled_sweep, log_spaced, neighborhoods, select_lambda_by_type,
    FitConfig, NeighborhoodFit,
};
use crate::gibbs::{run_chain, GibbsConfig};
use crate::model::{conditional_neg_hessian, Dataset, ModelSpec};
use crate::simgen::{generate_model, SimGraphConfig};

/// SplitMix64-style mixing of a base seed with job coordinates.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    path.iter().fold(mix(seed), |acc, &k| mix(acc ^ mix(k.wrapping_add(1))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    RecoveryCurve,
    GaussianBernoulliComparison,
    PoissonBernoulliRules,
    BicPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub p: usize,
    /// Sample sizes for recovery curves.
    pub n_grid: Vec<usize>,
    /// Sample size for the comparison experiments.
    pub n: usize,
    pub replicates: usize,
    /// Tuning constants c in `lambda = c * sqrt(log p / n)`.
    pub c_grid: Vec<f64>,
    pub a: f64,
    pub b: f64,
    pub seed: u64,
    pub burn_in: usize,
    pub thin: usize,
    /// Descending multipliers applied to the BIC-selected lambdas.
    pub sweep_scales: Vec<f64>,
    /// Multiplier on the BIC lambdas for the fits that feed the bound
    /// estimates.
    pub bound_lambda_multiplier: f64,
    pub fit: FitConfig,
    pub output_path: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::recovery_curve()
    }
}

/// Sample sizes `round(scaled * 3 log p)`.
pub fn n_grid_from_scaled(p: usize, scaled: &[f64]) -> Vec<usize> {
    let unit = 3.0 * (p as f64).ln();
    scaled.iter().map(|s| ((s * unit).round() as usize).max(2)).collect()
}

impl ExperimentConfig {
    /// Gaussian-Bernoulli recovery curves, p = 60, a = b = 0.3, c = 2.6.
    pub fn recovery_curve() -> Self {
        let p = 60;
        Self {
            experiment: ExperimentKind::RecoveryCurve,
            p,
            n_grid: n_grid_from_scaled(p, &[0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 12.0, 15.0]),
            n: 200,
            replicates: 20,
            c_grid: vec![2.6],
            a: 0.3,
            b: 0.3,
            seed: 1,
            burn_in: 3000,
            thin: 500,
            sweep_scales: default_sweep_scales(),
            bound_lambda_multiplier: 1.0,
            fit: FitConfig::default(),
            output_path: None,
        }
    }

    /// Gaussian-Bernoulli comparison, p = 40, n = 200, a = 0.3, b = 0.6.
    pub fn gaussian_bernoulli_comparison() -> Self {
        Self {
            experiment: ExperimentKind::GaussianBernoulliComparison,
            p: 40,
            n: 200,
            replicates: 25,
            a: 0.3,
            b: 0.6,
            ..Self::recovery_curve()
        }
    }

    pub fn bic_point() -> Self {
        Self {
            experiment: ExperimentKind::BicPoint,
            ..Self::gaussian_bernoulli_comparison()
        }
    }

    /// Poisson-Bernoulli selection-rule study, p = 80, n = 200, a = 0.8,
    /// b = 1, bound estimates from fits at half the BIC lambdas.
    pub fn poisson_bernoulli_rules() -> Self {
        Self {
            experiment: ExperimentKind::PoissonBernoulliRules,
            p: 80,
            n: 200,
            replicates: 25,
            a: 0.8,
            b: 1.0,
            bound_lambda_multiplier: 0.5,
            ..Self::recovery_curve()
        }
    }

    pub fn for_kind(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::RecoveryCurve => Self::recovery_curve(),
            ExperimentKind::GaussianBernoulliComparison => Self::gaussian_bernoulli_comparison(),
            ExperimentKind::PoissonBernoulliRules => Self::poisson_bernoulli_rules(),
            ExperimentKind::BicPoint => Self::bic_point(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(Error::InvalidConfig("replicates must be >= 1".into()));
        }
        if self.p < 4 || !self.p.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!("p must be even and >= 4, got {}", self.p)));
        }
        if self.thin < 1 {
            return Err(Error::InvalidConfig("thin must be >= 1".into()));
        }
        if !(self.bound_lambda_multiplier > 0.0) {
            return Err(Error::InvalidConfig("bound_lambda_multiplier must be positive".into()));
        }
        match self.experiment {
            ExperimentKind::RecoveryCurve => {
                if self.n_grid.is_empty() || self.c_grid.is_empty() {
                    return Err(Error::InvalidConfig("n_grid and c_grid must be non-empty".into()));
                }
                if self.n_grid.iter().any(|&n| n < 2) || self.c_grid.iter().any(|&c| !(c > 0.0)) {
                    return Err(Error::InvalidConfig("need n >= 2 and c > 0".into()));
                }
            }
            _ => {
                if self.n < 2 {
                    return Err(Error::InvalidConfig("n must be >= 2".into()));
                }
                if self.sweep_scales.is_empty()
                    || self.sweep_scales.iter().any(|&c| !(c > 0.0))
                    || self.sweep_scales.windows(2).any(|w| w[1] >= w[0])
                {
                    return Err(Error::InvalidConfig(
                        "sweep_scales must be positive and strictly descending".into(),
                    ));
                }
            }
        }
        self.fit.validate()?;
        SimGraphConfig::gaussian_bernoulli(self.p, self.a, self.b, 0).validate()
    }

    fn gibbs(&self, n: usize, seed: u64) -> GibbsConfig {
        GibbsConfig {
            burn_in: self.burn_in,
            thin: self.thin,
            n_samples: n,
            seed,
            ..GibbsConfig::default()
        }
    }
}

fn default_sweep_scales() -> Vec<f64> {
    log_spaced(10.0, 0.01, 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subgraph {
    /// Edges among first-type nodes, from first-type regressions.
    SameTypeFirst,
    /// Edges among second-type nodes, from second-type regressions.
    SameTypeSecond,
    /// Cross edges read off first-type neighbourhoods.
    CrossFromFirst,
    /// Cross edges read off second-type neighbourhoods.
    CrossFromSecond,
    Whole,
}

impl Subgraph {
    pub const ALL: [Subgraph; 5] = [
        Subgraph::SameTypeFirst,
        Subgraph::SameTypeSecond,
        Subgraph::CrossFromFirst,
        Subgraph::CrossFromSecond,
        Subgraph::Whole,
    ];
}

impl fmt::Display for Subgraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subgraph::SameTypeFirst => "same_type_first",
            Subgraph::SameTypeSecond => "same_type_second",
            Subgraph::CrossFromFirst => "cross_from_first",
            Subgraph::CrossFromSecond => "cross_from_second",
            Subgraph::Whole => "whole",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRecord {
    pub subgraph: Subgraph,
    pub n: usize,
    pub scaled_n: f64,
    pub p: usize,
    pub c: f64,
    pub successes: usize,
    pub replicates: usize,
    pub success_rate: f64,
}

/// Estimated subgraphs for a two-type chain-cross layout (first type on
/// nodes `0..m`). Same-type subgraphs use the union rule.
pub fn subgraph_estimates(
    neighborhoods: &[std::collections::BTreeSet<usize>],
    types: &[NodeType],
    bounds: &BoundEstimates,
) -> BTreeMap<Subgraph, EdgeSet> {
    let p = neighborhoods.len();
    let m = p / 2;
    let first = |s: usize| s < m;
    let or = combine_or(neighborhoods);
    let mut out = BTreeMap::new();
    out.insert(Subgraph::SameTypeFirst, or.filter(|s, t| first(s) && first(t)));
    out.insert(Subgraph::SameTypeSecond, or.filter(|s, t| !first(s) && !first(t)));
    let mut from_first = EdgeSet::new(p);
    let mut from_second = EdgeSet::new(p);
    for f in 0..m {
        for g in m..p {
            if neighborhoods[f].contains(&g) {
                from_first.insert(f, g);
            }
            if neighborhoods[g].contains(&f) {
                from_second.insert(f, g);
            }
        }
    }
    out.insert(Subgraph::CrossFromFirst, from_first);
    out.insert(Subgraph::CrossFromSecond, from_second);
    out.insert(
        Subgraph::Whole,
        combine_with_selection_rules(neighborhoods, types, bounds, Fallback::Or),
    );
    out
}

/// True subgraphs matching [`subgraph_estimates`].
pub fn subgraph_truth(truth: &EdgeSet) -> BTreeMap<Subgraph, EdgeSet> {
    let m = truth.p() / 2;
    let first = |s: usize| s < m;
    let cross = truth.filter(|s, t| first(s) != first(t));
    BTreeMap::from([
        (Subgraph::SameTypeFirst, truth.filter(|s, t| first(s) && first(t))),
        (Subgraph::SameTypeSecond, truth.filter(|s, t| !first(s) && !first(t))),
        (Subgraph::CrossFromFirst, cross.clone()),
        (Subgraph::CrossFromSecond, cross),
        (Subgraph::Whole, truth.clone()),
    ])
}

/// Recovery rates over `n_grid x c_grid`, one fixed graph and fresh data
/// per replicate.
pub fn run_recovery_curve(config: &ExperimentConfig) -> Result<Vec<RecoveryRecord>> {
    config.validate()?;
    let p = config.p;
    let model = generate_model(&SimGraphConfig::gaussian_bernoulli(
        p,
        config.a,
        config.b,
        derive_seed(config.seed, &[0]),
    ))?;
    let truth = subgraph_truth(&model.edges.support());

    let jobs: Vec<(usize, usize)> = (0..config.n_grid.len())
        .flat_map(|i| (0..config.replicates).map(move |r| (i, r)))
        .collect();
    // successes[(n index, c index)][subgraph] per job
    let outcomes: Vec<((usize, usize), Vec<BTreeMap<Subgraph, bool>>)> = jobs
        .par_iter()
        .map(|&(i, r)| {
            let n = config.n_grid[i];
            let seed = derive_seed(config.seed, &[1, i as u64, r as u64]);
            let per_c = recovery_job(config, &model, &truth, n, seed).unwrap_or_else(|e| {
                warn!("recovery job n = {n}, replicate {r} failed: {e}");
                vec![Subgraph::ALL.iter().map(|&g| (g, false)).collect(); config.c_grid.len()]
            });
            ((i, r), per_c)
        })
        .collect();

    let unit = 3.0 * (p as f64).ln();
    let mut records = Vec::new();
    for (i, &n) in config.n_grid.iter().enumerate() {
        for subgraph in Subgraph::ALL {
            for (ci, &c) in config.c_grid.iter().enumerate() {
                let successes = outcomes
                    .iter()
                    .filter(|((ji, _), per_c)| *ji == i && per_c[ci][&subgraph])
                    .count();
                records.push(RecoveryRecord {
                    subgraph,
                    n,
                    scaled_n: n as f64 / unit,
                    p,
                    c,
                    successes,
                    replicates: config.replicates,
                    success_rate: successes as f64 / config.replicates as f64,
                });
            }
        }
    }
    Ok(records)
}

fn recovery_job(
    config: &ExperimentConfig,
    model: &ModelSpec,
    truth: &BTreeMap<Subgraph, EdgeSet>,
    n: usize,
    seed: u64,
) -> Result<Vec<BTreeMap<Subgraph, bool>>> {
    let data = run_chain(model, &config.gibbs(n, seed))?;
    config
        .c_grid
        .iter()
        .map(|&c| {
            let lambda = c * ((config.p as f64).ln() / n as f64).sqrt();
            let lambdas = model.types.iter().map(|&k| (k, lambda)).collect();
            let fits = fit_all_at(&data, &lambdas, &config.fit)?;
            let nb = neighborhoods(&fits, config.p);
            let est = subgraph_estimates(&nb, &model.types, &estimate_bounds(&fits, &model.types));
            Ok(Subgraph::ALL.iter().map(|g| (*g, est[g] == truth[g])).collect())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    And,
    Or,
    /// Type-aware rules with bounds evaluated at the true parameters.
    RulesTrue,
    /// Type-aware rules with plug-in bound estimates.
    RulesEstimated,
}

impl fmt::Display for Combiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Combiner::And => "and",
            Combiner::Or => "or",
            Combiner::RulesTrue => "rules_true",
            Combiner::RulesEstimated => "rules_estimated",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Same,
    Cross,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCountRow {
    pub step: usize,
    pub scale: f64,
    pub method: Combiner,
    pub scope: Scope,
    pub estimated_edges: f64,
    pub correct_edges: f64,
    pub true_edges: f64,
}

struct Tally {
    estimated: usize,
    correct: usize,
    truth: usize,
}

fn tally(est: &EdgeSet, truth: &EdgeSet, types: &[NodeType], scope: Scope) -> Tally {
    let keep = |s: usize, t: usize| (types[s] == types[t]) == (scope == Scope::Same);
    let est = est.filter(keep);
    let truth = truth.filter(keep);
    Tally {
        estimated: est.len(),
        correct: est.intersection_count(&truth),
        truth: truth.len(),
    }
}

fn comparison_graph(config: &ExperimentConfig, replicate: usize) -> SimGraphConfig {
    let seed = derive_seed(config.seed, &[2, replicate as u64]);
    match config.experiment {
        ExperimentKind::PoissonBernoulliRules => {
            SimGraphConfig::poisson_bernoulli(config.p, config.a, config.b, seed)
        }
        _ => SimGraphConfig::gaussian_bernoulli(config.p, config.a, config.b, seed),
    }
}

fn comparison_methods(kind: ExperimentKind) -> Vec<Combiner> {
    match kind {
        ExperimentKind::PoissonBernoulliRules => {
            vec![Combiner::And, Combiner::Or, Combiner::RulesTrue, Combiner::RulesEstimated]
        }
        _ => vec![Combiner::And, Combiner::Or, Combiner::RulesEstimated],
    }
}

/// Per-replicate tallies: `[step][method][scope] -> (estimated, correct, truth)`.
type ReplicateTallies = Vec<Vec<[(usize, usize, usize); 2]>>;

fn comparison_replicate(config: &ExperimentConfig, replicate: usize) -> Result<ReplicateTallies> {
    let model = generate_model(&comparison_graph(config, replicate))?;
    let data = run_chain(
        &model,
        &config.gibbs(config.n, derive_seed(config.seed, &[3, replicate as u64])),
    )?;
    let types = &model.types;
    let truth = model.edges.support();

    let path = fit_all_paths(&data, &config.fit)?;
    let chosen = select_lambda_by_type(&path, types);
    let base: BTreeMap<NodeType, f64> = chosen.iter().map(|(k, c)| (*k, c.lambda)).collect();

    let bound_lambdas: BTreeMap<NodeType, f64> = base
        .iter()
        .map(|(k, l)| (*k, l * config.bound_lambda_multiplier))
        .collect();
    let estimated = estimate_bounds(&fit_all_at(&data, &bound_lambdas, &config.fit)?, types);
    let true_b = true_bounds(&model);

    let methods = comparison_methods(config.experiment);
    let sweep = fit_scaled_sweep(&data, &base, &config.sweep_scales, &config.fit)?;
    Ok(sweep
        .iter()
        .map(|fits| {
            let nb = neighborhoods(fits, model.p());
            methods
                .iter()
                .map(|method| {
                    let est = match method {
                        Combiner::And => combine_and(&nb),
                        Combiner::Or => combine_or(&nb),
                        Combiner::RulesTrue => {
                            combine_with_selection_rules(&nb, types, &true_b, Fallback::Or)
                        }
                        Combiner::RulesEstimated => {
                            combine_with_selection_rules(&nb, types, &estimated, Fallback::Or)
                        }
                    };
                    [Scope::Same, Scope::Cross].map(|scope| {
                        let t = tally(&est, &truth, types, scope);
                        (t.estimated, t.correct, t.truth)
                    })
                })
                .collect()
        })
        .collect())
}

/// Estimated versus correct edge counts along a sweep of multipliers on the
/// BIC-selected lambdas, averaged over replicates (a new graph per
/// replicate). Failed replicates are skipped and logged.
pub fn run_edge_count_comparison(config: &ExperimentConfig) -> Result<Vec<EdgeCountRow>> {
    config.validate()?;
    let results: Vec<ReplicateTallies> = (0..config.replicates)
        .into_par_iter()
        .filter_map(|r| match comparison_replicate(config, r) {
            Ok(t) => Some(t),
            Err(e) => {
                warn!("comparison replicate {r} failed: {e}");
                None
            }
        })
        .collect();
    if results.is_empty() {
        return Err(Error::InvalidConfig("every replicate failed".into()));
    }
    let count = results.len() as f64;
    let methods = comparison_methods(config.experiment);
    let mut rows = Vec::new();
    for (step, &scale) in config.sweep_scales.iter().enumerate() {
        for (mi, &method) in methods.iter().enumerate() {
            for (si, scope) in [Scope::Same, Scope::Cross].into_iter().enumerate() {
                let sum = |f: fn(&(usize, usize, usize)) -> usize| {
                    results.iter().map(|r| f(&r[step][mi][si]) as f64).sum::<f64>() / count
                };
                rows.push(EdgeCountRow {
                    step,
                    scale,
                    method,
                    scope,
                    estimated_edges: sum(|t| t.0),
                    correct_edges: sum(|t| t.1),
                    true_edges: sum(|t| t.2),
                });
            }
        }
    }
    info!("edge-count comparison: {} of {} replicates succeeded", results.len(), config.replicates);
    Ok(rows)
}

/// `(estimated, correct)` points of one method's curve, ordered by
/// estimated count.
pub fn curve(rows: &[EdgeCountRow], method: Combiner, scope: Scope) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.method == method && r.scope == scope)
        .map(|r| (r.estimated_edges, r.correct_edges))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts
}

/// Piecewise-linear interpolation of a curve at `x`; None outside its range.
pub fn interpolate(curve: &[(f64, f64)], x: f64) -> Option<f64> {
    let first = curve.first()?;
    let last = curve.last()?;
    if x < first.0 || x > last.0 {
        return None;
    }
    for w in curve.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x >= x0 && x <= x1 {
            if x1 == x0 {
                return Some(y0.max(y1));
            }
            return Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0));
        }
    }
    Some(first.1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicPointRecord {
    pub replicate: usize,
    pub estimated_edges: usize,
    pub correct_edges: usize,
    pub true_edges: usize,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BicPoint {
    pub precision: f64,
    pub recall: f64,
    pub replicates: Vec<BicPointRecord>,
}

/// Precision with the convention that an empty estimate has precision 0.
pub fn precision_recall(estimated: &EdgeSet, truth: &EdgeSet) -> (f64, f64) {
    let correct = estimated.intersection_count(truth) as f64;
    let precision = if estimated.is_empty() {
        0.0
    } else {
        correct / estimated.len() as f64
    };
    let recall = if truth.is_empty() {
        0.0
    } else {
        correct / truth.len() as f64
    };
    (precision, recall)
}

/// BIC-tuned edge estimate for one dataset: lambda per node type by summed
/// BIC, cross edges from the preferred endpoint, same-type edges by union.
pub fn bic_edge_estimate(data: &Dataset, config: &FitConfig) -> Result<(EdgeSet, Vec<NeighborhoodFit>)> {
    let path = fit_all_paths(data, config)?;
    let chosen = select_lambda_by_type(&path, data.types());
    let fits = path.fits_at(&chosen);
    let nb = neighborhoods(&fits, data.p());
    let bounds = estimate_bounds(&fits, data.types());
    Ok((combine_with_selection_rules(&nb, data.types(), &bounds, Fallback::Or), fits))
}

/// Mean precision and recall of BIC-tuned estimates over replicates.
pub fn run_bic_point(config: &ExperimentConfig) -> Result<BicPoint> {
    config.validate()?;
    let records: Vec<BicPointRecord> = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let model = generate_model(&comparison_graph(config, r))?;
            let data = run_chain(
                &model,
                &config.gibbs(config.n, derive_seed(config.seed, &[3, r as u64])),
            )?;
            let truth = model.edges.support();
            let (est, _) = bic_edge_estimate(&data, &config.fit)?;
            let (precision, recall) = precision_recall(&est, &truth);
            Ok(BicPointRecord {
                replicate: r,
                estimated_edges: est.len(),
                correct_edges: est.intersection_count(&truth),
                true_edges: truth.len(),
                precision,
                recall,
            })
        })
        .collect::<Result<_>>()?;
    let k = records.len() as f64;
    Ok(BicPoint {
        precision: records.iter().map(|r| r.precision).sum::<f64>() / k,
        recall: records.iter().map(|r| r.recall).sum::<f64>() / k,
        replicates: records,
    })
}

/// `max_{l in Delta} || Q_{l, Delta^c} Q_{Delta^c, Delta^c}^{-1} ||_1` where
/// Q is the negative Hessian of node s's conditional log-likelihood at the
/// true parameters, Delta indexes true non-neighbours and Delta^c the true
/// neighbours plus the intercept.
pub fn irrepresentability_diagnostic(model: &ModelSpec, data: &Dataset, s: usize) -> Result<f64> {
    if s >= model.p() {
        return Err(Error::IndexOutOfRange { index: s, p: model.p() });
    }
    let theta = model.edges.column_without(s);
    let cond = Conditional::new(model.types[s], model.params[s].alpha2);
    let q = conditional_neg_hessian(cond, &theta, model.params[s].alpha1, data, s)?;
    let d = theta.len();
    let off: Vec<usize> = (0..d).filter(|&k| theta[k] == 0.0).collect();
    let mut on: Vec<usize> = (0..d).filter(|&k| theta[k] != 0.0).collect();
    on.push(d);
    if off.is_empty() {
        return Ok(0.0);
    }
    let q_on = DMatrix::from_fn(on.len(), on.len(), |i, j| q[(on[i], on[j])]);
    let q_cross = DMatrix::from_fn(off.len(), on.len(), |i, j| q[(off[i], on[j])]);
    let inv = q_on
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular(format!("neighbour block of node {s} is singular")))?;
    let prod = q_cross * inv;
    Ok(prod
        .row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max))
}

/// Writes serialisable rows as CSV with a header.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
