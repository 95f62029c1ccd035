//! Benchmark graphs: two same-type chains joined by a perfect matching.
//!
//! Nodes `0..m` have the first type and `m..2m` the second. Node j is joined
//! to j+1 within its chain and to `m + j` across. Edge potentials are
//! `±Unif(a, b)` with a fair random sign, then repaired where needed so
//! the model is strongly compatible.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::combine::EdgeSet;
use crate::compat::{check_compatibility, gaussian_block, max_eigenvalue, Verdict};
use crate::error::{Error, Result};
use crate::family::NodeType;
use crate::model::{EdgeMatrix, ModelSpec, NodeParams};

/// Linear node potentials for one type block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Alpha1Block {
    Constant(f64),
    /// First half of the block gets `.0`, second half `.1`.
    Split(f64, f64),
}

impl Default for Alpha1Block {
    fn default() -> Self {
        Alpha1Block::Constant(0.0)
    }
}

impl Alpha1Block {
    fn value(&self, j: usize, m: usize) -> f64 {
        match *self {
            Alpha1Block::Constant(v) => v,
            Alpha1Block::Split(first, second) => {
                if j < m / 2 {
                    first
                } else {
                    second
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimGraphConfig {
    pub p: usize,
    pub type_pair: (NodeType, NodeType),
    pub a: f64,
    pub b: f64,
    pub alpha1_first: Alpha1Block,
    pub alpha1_second: Alpha1Block,
    pub seed: u64,
}

impl SimGraphConfig {
    /// Gaussian-Bernoulli graph with zero linear potentials.
    pub fn gaussian_bernoulli(p: usize, a: f64, b: f64, seed: u64) -> Self {
        Self {
            p,
            type_pair: (NodeType::Gaussian, NodeType::Bernoulli),
            a,
            b,
            alpha1_first: Alpha1Block::Constant(0.0),
            alpha1_second: Alpha1Block::Constant(0.0),
            seed,
        }
    }

    /// Poisson-Bernoulli graph whose first half of Poisson nodes has
    /// `alpha1 = -3` and second half `alpha1 = 0`.
    pub fn poisson_bernoulli(p: usize, a: f64, b: f64, seed: u64) -> Self {
        Self {
            p,
            type_pair: (NodeType::Poisson, NodeType::Bernoulli),
            a,
            b,
            alpha1_first: Alpha1Block::Split(-3.0, 0.0),
            alpha1_second: Alpha1Block::Constant(0.0),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 4 || !self.p.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!("p must be even and >= 4, got {}", self.p)));
        }
        if !(self.a > 0.0 && self.a <= self.b && self.b.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < a <= b, got a = {}, b = {}",
                self.a, self.b
            )));
        }
        Ok(())
    }

    pub fn types(&self) -> Vec<NodeType> {
        let m = self.p / 2;
        (0..self.p)
            .map(|s| if s < m { self.type_pair.0 } else { self.type_pair.1 })
            .collect()
    }
}

/// Chain-cross edge set on p = 2m nodes (zero-based).
pub fn chain_cross_edge_set(p: usize) -> Result<EdgeSet> {
    if p < 4 || !p.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!("p must be even and >= 4, got {p}")));
    }
    let m = p / 2;
    let mut edges = EdgeSet::new(p);
    for j in 0..m - 1 {
        edges.insert(j, j + 1);
        edges.insert(m + j, m + j + 1);
    }
    for j in 0..m {
        edges.insert(j, m + j);
    }
    Ok(edges)
}

/// `theta_st = y * r` with `P(y = ±1) = 1/2` and `r ~ Unif(a, b)` for every
/// edge, visited in canonical order; zero elsewhere.
pub fn draw_edge_potentials<R: Rng + ?Sized>(edges: &EdgeSet, a: f64, b: f64, rng: &mut R) -> EdgeMatrix {
    let mut theta = EdgeMatrix::zeros(edges.p());
    for (s, t) in edges.iter() {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let magnitude = if a == b { a } else { rng.random_range(a..=b) };
        theta.set(s, t, sign * magnitude);
    }
    theta
}

/// Makes a Gaussian block (quadratic coefficients on the diagonal) negative
/// definite with unit-magnitude diagonal. An already negative definite
/// block is returned unchanged. Otherwise
/// `T = -B + (lambda_min(B) - 0.1) I` is rescaled to
/// `D^{-1/2} T D^{-1/2}` with `D = diag(|T_kk|)`.
pub fn repair_gaussian_block(block: &DMatrix<f64>) -> DMatrix<f64> {
    if block.nrows() == 0 || max_eigenvalue(block) < -1e-10 {
        return block.clone();
    }
    let m = block.nrows();
    let min_eig = block
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let t = -block + DMatrix::identity(m, m) * (min_eig - 0.1);
    let scale: Vec<f64> = (0..m).map(|k| t[(k, k)].abs().powf(-0.5)).collect();
    let mut out = DMatrix::from_fn(m, m, |i, j| scale[i] * t[(i, j)] * scale[j]);
    for k in 0..m {
        out[(k, k)] = -1.0;
    }
    // Keep exact symmetry.
    for i in 0..m {
        for j in 0..i {
            out[(j, i)] = out[(i, j)];
        }
    }
    out
}

/// Applies [`repair_gaussian_block`] to a model's Gaussian nodes, writing
/// the off-diagonal entries back into the edge matrix and the diagonal
/// into the Gaussian alpha2 values.
pub fn repair_gaussian_nodes(model: &ModelSpec) -> Result<ModelSpec> {
    let (idx, block) = gaussian_block(model);
    if idx.is_empty() {
        return Ok(model.clone());
    }
    let repaired = repair_gaussian_block(&block);
    if repaired == block {
        return Ok(model.clone());
    }
    let mut edges = model.edges.clone();
    let mut params = model.params.clone();
    for (i, &s) in idx.iter().enumerate() {
        params[s].alpha2 = repaired[(i, i)];
        for (j, &t) in idx.iter().enumerate().skip(i + 1) {
            edges.set(s, t, repaired[(i, j)]);
        }
    }
    ModelSpec::new(model.types.clone(), params, edges)
}

/// Replaces every Poisson-Poisson potential by `-|theta|`.
pub fn repair_poisson_edges(theta: &EdgeMatrix, poisson: &[usize]) -> EdgeMatrix {
    let mut out = theta.clone();
    for (i, &s) in poisson.iter().enumerate() {
        for &t in &poisson[i + 1..] {
            let v = theta.get(s, t);
            if v != 0.0 {
                out.set(s, t, -v.abs());
            }
        }
    }
    out
}

/// Draws a strongly compatible chain-cross model.
pub fn generate_model(config: &SimGraphConfig) -> Result<ModelSpec> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let edges = chain_cross_edge_set(config.p)?;
    let theta = draw_edge_potentials(&edges, config.a, config.b, &mut rng);
    let types = config.types();
    let m = config.p / 2;
    let params: Vec<NodeParams> = types
        .iter()
        .enumerate()
        .map(|(s, &kind)| {
            let alpha1 = if s < m {
                config.alpha1_first.value(s, m)
            } else {
                config.alpha1_second.value(s - m, m)
            };
            NodeParams::standard(kind, alpha1)
        })
        .collect();

    let poisson: Vec<usize> = crate::model::indices_of(&types, NodeType::Poisson);
    let theta = repair_poisson_edges(&theta, &poisson);
    let model = repair_gaussian_nodes(&ModelSpec::new(types, params, theta)?)?;

    let report = check_compatibility(&model);
    if report.verdict != Verdict::StronglyCompatible {
        let detail = report
            .violations
            .iter()
            .map(|v| v.message.clone())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::NotStronglyCompatible(format!(
            "generated {}-{} model after repair: {detail}",
            config.type_pair.0, config.type_pair.1
        )));
    }
    Ok(model)
}
