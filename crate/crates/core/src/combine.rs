//! Merging per-node neighbourhood estimates into one undirected edge set.
//!
//! Besides the usual intersection (AND) and union (OR) rules, edges between
//! nodes of different types can be read off the neighbourhood of whichever
//! endpoint has the better recovery guarantee. For Gaussian endpoints that
//! is always the Gaussian node. For the other cross-type pairs the choice
//! depends on plug-in bounds on the log-partition derivatives:
//!
//! * Poisson: `b_P = exp(alpha1 + sum_{t in I} |theta_ts|)` bounds `exp(eta)`
//!   and hence `D''` and `D'''`.
//! * Exponential: `b_E = |alpha1| - sum_{t in I} |theta_ts|` bounds `|eta|`
//!   from below, so `D'' <= b_E^-2` and `|D'''| <= 2 b_E^-3`.
//!
//! where `I` is the set of Bernoulli nodes. Comparing the resulting recovery
//! probability lower bounds gives threshold rules; pairs that fall outside
//! every threshold use the fallback rule.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::family::NodeType;
use crate::fit::NeighborhoodFit;
use crate::model::{regressor_position, ModelSpec};

/// Undirected edges over p nodes, stored as canonical `(min, max)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgeSet {
    p: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl EdgeSet {
    pub fn new(p: usize) -> Self {
        Self {
            p,
            edges: BTreeSet::new(),
        }
    }

    pub fn from_pairs(p: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut set = Self::new(p);
        for (s, t) in pairs {
            set.insert(s, t);
        }
        set
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Inserts `{s, t}`; returns false for self-loops and duplicates.
    pub fn insert(&mut self, s: usize, t: usize) -> bool {
        assert!(s < self.p && t < self.p, "edge ({s}, {t}) out of range for p = {}", self.p);
        if s == t {
            return false;
        }
        self.edges.insert((s.min(t), s.max(t)))
    }

    pub fn contains(&self, s: usize, t: usize) -> bool {
        self.edges.contains(&(s.min(t), s.max(t)))
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn is_subset(&self, other: &EdgeSet) -> bool {
        self.edges.is_subset(&other.edges)
    }

    pub fn intersection_count(&self, other: &EdgeSet) -> usize {
        self.edges.intersection(&other.edges).count()
    }

    /// Edges whose endpoint types satisfy `keep`.
    pub fn filter(&self, mut keep: impl FnMut(usize, usize) -> bool) -> EdgeSet {
        EdgeSet {
            p: self.p,
            edges: self.edges.iter().copied().filter(|&(s, t)| keep(s, t)).collect(),
        }
    }
}

/// Symmetrisation rule for a pair without a type-based preference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Fallback {
    And,
    #[default]
    Or,
}

impl FromStr for Fallback {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "and" => Ok(Fallback::And),
            "or" => Ok(Fallback::Or),
            _ => Err(Error::Parse(format!("unknown fallback rule '{s}'"))),
        }
    }
}

impl fmt::Display for Fallback {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fallback::And => "and",
            Fallback::Or => "or",
        })
    }
}

/// `(s, t)` is an edge iff each node is in the other's neighbourhood.
pub fn combine_and(neighborhoods: &[BTreeSet<usize>]) -> EdgeSet {
    combine_with(neighborhoods, |a, b| a && b)
}

/// `(s, t)` is an edge iff either node is in the other's neighbourhood.
pub fn combine_or(neighborhoods: &[BTreeSet<usize>]) -> EdgeSet {
    combine_with(neighborhoods, |a, b| a || b)
}

fn combine_with(neighborhoods: &[BTreeSet<usize>], rule: impl Fn(bool, bool) -> bool) -> EdgeSet {
    let p = neighborhoods.len();
    let mut out = EdgeSet::new(p);
    for s in 0..p {
        for t in (s + 1)..p {
            if rule(neighborhoods[t].contains(&s), neighborhoods[s].contains(&t)) {
                out.insert(s, t);
            }
        }
    }
    out
}

/// Plug-in values of the Poisson and Exponential derivative bounds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundEstimates {
    pub b_p: BTreeMap<usize, f64>,
    pub b_e: BTreeMap<usize, f64>,
}

fn bernoulli_mass(types: &[NodeType], s: usize, coef: impl Fn(usize) -> f64) -> f64 {
    types
        .iter()
        .enumerate()
        .filter(|&(t, &k)| t != s && k == NodeType::Bernoulli)
        .map(|(t, _)| coef(t).abs())
        .sum()
}

fn bound_for(kind: NodeType, alpha1: f64, mass: f64) -> Option<f64> {
    match kind {
        NodeType::Poisson => Some((alpha1 + mass).exp()),
        NodeType::Exponential => Some(alpha1.abs() - mass),
        _ => None,
    }
}

/// Bounds computed from each Poisson/Exponential node's own fitted
/// coefficients. `fits` may be in any order; each is keyed by its node.
pub fn estimate_bounds(fits: &[NeighborhoodFit], types: &[NodeType]) -> BoundEstimates {
    let mut out = BoundEstimates::default();
    for fit in fits {
        let s = fit.s;
        let mass = bernoulli_mass(types, s, |t| {
            regressor_position(s, t).map_or(0.0, |k| fit.theta_hat[k])
        });
        match bound_for(types[s], fit.alpha1_hat, mass) {
            Some(b) if types[s] == NodeType::Poisson => {
                out.b_p.insert(s, b);
            }
            Some(b) => {
                out.b_e.insert(s, b);
            }
            None => {}
        }
    }
    out
}

/// Bounds evaluated at the generative parameters of a model.
pub fn true_bounds(model: &ModelSpec) -> BoundEstimates {
    let mut out = BoundEstimates::default();
    for s in 0..model.p() {
        let mass = bernoulli_mass(&model.types, s, |t| model.edges.get(t, s));
        match (model.types[s], bound_for(model.types[s], model.params[s].alpha1, mass)) {
            (NodeType::Poisson, Some(b)) => {
                out.b_p.insert(s, b);
            }
            (NodeType::Exponential, Some(b)) => {
                out.b_e.insert(s, b);
            }
            _ => {}
        }
    }
    out
}

/// Which endpoint's neighbourhood decides an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeChoice {
    Node(usize),
    Fallback,
}

/// Type-aware choice of the neighbourhood used to estimate edge `(s, t)`.
/// Boundary values of the thresholds count as unmet.
pub fn select_edge_estimate(
    s: usize,
    t: usize,
    types: &[NodeType],
    bounds: &BoundEstimates,
) -> EdgeChoice {
    use NodeType::*;
    let (ks, kt) = (types[s], types[t]);
    if ks == kt {
        return EdgeChoice::Fallback;
    }
    if ks == Gaussian {
        return EdgeChoice::Node(s);
    }
    if kt == Gaussian {
        return EdgeChoice::Node(t);
    }
    // Order the pair so the first node has the "smaller" type in
    // (Bernoulli, Poisson, Exponential) order; this makes the rule symmetric.
    let rank = |k: NodeType| match k {
        Bernoulli => 0,
        Poisson => 1,
        Exponential => 2,
        Gaussian => 3,
    };
    let (a, b) = if rank(ks) < rank(kt) { (s, t) } else { (t, s) };
    match (types[a], types[b]) {
        (Bernoulli, Poisson) => match bounds.b_p.get(&b) {
            Some(&bp) if bp < 1.0 => EdgeChoice::Node(b),
            Some(&bp) if bp > 2.0 => EdgeChoice::Node(a),
            _ => EdgeChoice::Fallback,
        },
        (Bernoulli, Exponential) => match bounds.b_e.get(&b) {
            Some(&be) if be >= 1.0 => EdgeChoice::Node(b),
            Some(&be) if be < 1.0 => EdgeChoice::Node(a),
            _ => EdgeChoice::Fallback,
        },
        (Poisson, Exponential) => match (bounds.b_p.get(&a), bounds.b_e.get(&b)) {
            (Some(&bp), Some(&be)) => {
                let sq = be * be * bp;
                let cube = be * be * be * bp;
                if sq < 1.0 && cube < 2.0 {
                    EdgeChoice::Node(a)
                } else if sq > 1.0 && cube > 2.0 {
                    EdgeChoice::Node(b)
                } else {
                    EdgeChoice::Fallback
                }
            }
            _ => EdgeChoice::Fallback,
        },
        _ => EdgeChoice::Fallback,
    }
}

/// Cross-type pairs follow [`select_edge_estimate`]; same-type and
/// undecided pairs follow `fallback`.
pub fn combine_with_selection_rules(
    neighborhoods: &[BTreeSet<usize>],
    types: &[NodeType],
    bounds: &BoundEstimates,
    fallback: Fallback,
) -> EdgeSet {
    let p = neighborhoods.len();
    assert_eq!(types.len(), p, "one node type per neighbourhood");
    let mut out = EdgeSet::new(p);
    for s in 0..p {
        for t in (s + 1)..p {
            let in_s = neighborhoods[s].contains(&t);
            let in_t = neighborhoods[t].contains(&s);
            let present = match select_edge_estimate(s, t, types, bounds) {
                EdgeChoice::Node(u) if u == s => in_s,
                EdgeChoice::Node(_) => in_t,
                EdgeChoice::Fallback => match fallback {
                    Fallback::And => in_s && in_t,
                    Fallback::Or => in_s || in_t,
                },
            };
            if present {
                out.insert(s, t);
            }
        }
    }
    out
}

/// Convenience wrapper that derives neighbourhoods and bounds from fits.
pub fn combine_fits_with_selection_rules(
    fits: &[NeighborhoodFit],
    types: &[NodeType],
    fallback: Fallback,
) -> EdgeSet {
    let neighborhoods = crate::fit::neighborhoods(fits, types.len());
    let bounds = estimate_bounds(fits, types);
    combine_with_selection_rules(&neighborhoods, types, &bounds, fallback)
}
