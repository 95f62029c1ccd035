//! Mixed pairwise model specification, datasets, and node-conditional
//! likelihoods.

use nalgebra::{DMatrix, DVector};

use crate::combine::EdgeSet;
use crate::error::{Error, Result};
use crate::family::{Conditional, NodeType};

/// Node-potential coefficients `f_s(x) = alpha1 x + alpha2 x^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeParams {
    pub alpha1: f64,
    /// Only meaningful (and required negative) for Gaussian nodes.
    pub alpha2: f64,
}

impl NodeParams {
    pub fn new(alpha1: f64, alpha2: f64) -> Self {
        Self { alpha1, alpha2 }
    }

    pub fn standard(kind: NodeType, alpha1: f64) -> Self {
        Self::new(alpha1, kind.default_alpha2())
    }
}

/// Symmetric edge-potential matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMatrix(DMatrix<f64>);

impl EdgeMatrix {
    pub fn zeros(p: usize) -> Self {
        Self(DMatrix::zeros(p, p))
    }

    pub fn from_matrix(theta: DMatrix<f64>) -> Result<Self> {
        let p = theta.nrows();
        if theta.ncols() != p {
            return Err(Error::Dimension(format!(
                "edge matrix is {}x{}, expected square",
                p,
                theta.ncols()
            )));
        }
        for s in 0..p {
            if theta[(s, s)] != 0.0 {
                return Err(Error::Dimension(format!(
                    "edge matrix diagonal entry {s} is {}, expected 0",
                    theta[(s, s)]
                )));
            }
            for t in 0..s {
                if !theta[(s, t)].is_finite() || theta[(s, t)] != theta[(t, s)] {
                    return Err(Error::Dimension(format!(
                        "edge matrix not symmetric at ({t}, {s})"
                    )));
                }
            }
        }
        Ok(Self(theta))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Dimension("edge matrix rows must all have length p".into()));
        }
        Self::from_matrix(DMatrix::from_fn(p, p, |i, j| rows[i][j]))
    }

    pub fn p(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, s: usize, t: usize) -> f64 {
        self.0[(s, t)]
    }

    /// Sets both `theta[s][t]` and `theta[t][s]`.
    pub fn set(&mut self, s: usize, t: usize, value: f64) {
        assert_ne!(s, t, "edge potentials have zero diagonal");
        self.0[(s, t)] = value;
        self.0[(t, s)] = value;
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.p())
            .map(|i| self.0.row(i).iter().copied().collect())
            .collect()
    }

    /// Column s without its diagonal element, in ascending node order.
    pub fn column_without(&self, s: usize) -> Vec<f64> {
        (0..self.p()).filter(|&t| t != s).map(|t| self.0[(t, s)]).collect()
    }

    pub fn neighbours(&self, s: usize) -> Vec<usize> {
        (0..self.p())
            .filter(|&t| t != s && self.0[(t, s)] != 0.0)
            .collect()
    }

    pub fn support(&self) -> EdgeSet {
        let p = self.p();
        let mut edges = EdgeSet::new(p);
        for s in 0..p {
            for t in (s + 1)..p {
                if self.0[(s, t)] != 0.0 {
                    edges.insert(s, t);
                }
            }
        }
        edges
    }
}

/// Generative description of a mixed pairwise model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub types: Vec<NodeType>,
    pub params: Vec<NodeParams>,
    pub edges: EdgeMatrix,
}

impl ModelSpec {
    pub fn new(types: Vec<NodeType>, params: Vec<NodeParams>, edges: EdgeMatrix) -> Result<Self> {
        let p = types.len();
        if params.len() != p || edges.p() != p {
            return Err(Error::Dimension(format!(
                "{} types, {} parameter pairs, {}x{} edge matrix",
                p,
                params.len(),
                edges.p(),
                edges.p()
            )));
        }
        for (s, (kind, par)) in types.iter().zip(&params).enumerate() {
            if !par.alpha1.is_finite() || !par.alpha2.is_finite() {
                return Err(Error::InvalidConfig(format!("node {s} has non-finite parameters")));
            }
            if *kind != NodeType::Gaussian && par.alpha2 != 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "node {s} is {kind}; alpha2 must be 0"
                )));
            }
        }
        Ok(Self {
            types,
            params,
            edges,
        })
    }

    pub fn p(&self) -> usize {
        self.types.len()
    }

    pub fn conditional(&self, s: usize) -> Conditional {
        Conditional::new(self.types[s], self.params[s].alpha2)
    }

    pub fn indices_of(&self, kind: NodeType) -> Vec<usize> {
        indices_of(&self.types, kind)
    }
}

pub(crate) fn indices_of(types: &[NodeType], kind: NodeType) -> Vec<usize> {
    types
        .iter()
        .enumerate()
        .filter(|(_, &k)| k == kind)
        .map(|(i, _)| i)
        .collect()
}

/// Node index of the k-th regressor when node s is the response.
pub fn regressor_node(s: usize, k: usize) -> usize {
    if k < s {
        k
    } else {
        k + 1
    }
}

/// Position of node t among the regressors of node s.
pub fn regressor_position(s: usize, t: usize) -> Option<usize> {
    match t.cmp(&s) {
        std::cmp::Ordering::Less => Some(t),
        std::cmp::Ordering::Equal => None,
        std::cmp::Ordering::Greater => Some(t - 1),
    }
}

/// n x p observation matrix with per-column node types.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    types: Vec<NodeType>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, types: Vec<NodeType>) -> Result<Self> {
        if x.ncols() != types.len() {
            return Err(Error::Dimension(format!(
                "{} columns but {} node types",
                x.ncols(),
                types.len()
            )));
        }
        for (s, &kind) in types.iter().enumerate() {
            if let Some(&value) = x.column(s).iter().find(|v| !kind.in_support(**v)) {
                return Err(Error::Support {
                    kind,
                    node: s,
                    value,
                });
            }
        }
        Ok(Self { x, types })
    }

    pub fn from_rows(rows: &[Vec<f64>], types: Vec<NodeType>) -> Result<Self> {
        let p = types.len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Dimension("every row must have one value per node".into()));
        }
        Self::new(DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]), types)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn types(&self) -> &[NodeType] {
        &self.types
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn get(&self, i: usize, s: usize) -> f64 {
        self.x[(i, s)]
    }

    pub fn column(&self, s: usize) -> DVector<f64> {
        self.x.column(s).into_owned()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.x.row(i).iter().copied().collect()
    }

    /// n x (p-1) matrix of the columns other than s.
    pub fn regressors(&self, s: usize) -> DMatrix<f64> {
        self.x.clone().remove_column(s)
    }

    fn check_node(&self, s: usize) -> Result<()> {
        if s >= self.p() {
            Err(Error::IndexOutOfRange { index: s, p: self.p() })
        } else {
            Ok(())
        }
    }
}

/// `alpha1_s + sum_{t != s} theta_ts x_t` for a state given without node s.
pub fn natural_parameter(model: &ModelSpec, s: usize, x_minus_s: &[f64]) -> Result<f64> {
    let p = model.p();
    if s >= p {
        return Err(Error::IndexOutOfRange { index: s, p });
    }
    if x_minus_s.len() + 1 != p {
        return Err(Error::Dimension(format!(
            "x_minus_s has length {}, expected {}",
            x_minus_s.len(),
            p - 1
        )));
    }
    let theta = model.edges.as_matrix();
    Ok(model.params[s].alpha1
        + x_minus_s
            .iter()
            .enumerate()
            .map(|(k, &xt)| theta[(regressor_node(s, k), s)] * xt)
            .sum::<f64>())
}

fn check_coefficients(data: &Dataset, s: usize, theta_s: &[f64]) -> Result<()> {
    data.check_node(s)?;
    if theta_s.len() + 1 != data.p() {
        return Err(Error::Dimension(format!(
            "theta_s has length {}, expected {}",
            theta_s.len(),
            data.p() - 1
        )));
    }
    Ok(())
}

fn row_eta(data: &Dataset, s: usize, theta_s: &[f64], alpha1: f64, i: usize) -> f64 {
    alpha1
        + theta_s
            .iter()
            .enumerate()
            .map(|(k, &th)| th * data.get(i, regressor_node(s, k)))
            .sum::<f64>()
}

/// Average node-conditional log-likelihood of node s, base-measure terms
/// included.
pub fn conditional_loglik(
    cond: Conditional,
    theta_s: &[f64],
    alpha1: f64,
    data: &Dataset,
    s: usize,
) -> Result<f64> {
    check_coefficients(data, s, theta_s)?;
    let n = data.n();
    let mut total = 0.0;
    for i in 0..n {
        let eta = row_eta(data, s, theta_s, alpha1, i);
        let xs = data.get(i, s);
        total += cond.base_measure(xs) + eta * xs - cond.log_partition(eta)?;
    }
    Ok(total / n as f64)
}

/// Gradient of [`conditional_loglik`] with respect to `(theta_s, alpha1)`;
/// the intercept coordinate is last.
pub fn conditional_loglik_gradient(
    cond: Conditional,
    theta_s: &[f64],
    alpha1: f64,
    data: &Dataset,
    s: usize,
) -> Result<Vec<f64>> {
    check_coefficients(data, s, theta_s)?;
    let n = data.n();
    let p = data.p();
    let mut grad = vec![0.0; p];
    for i in 0..n {
        let eta = row_eta(data, s, theta_s, alpha1, i);
        let (d1, _, _) = cond.derivs(eta)?;
        let resid = data.get(i, s) - d1;
        for (k, g) in grad.iter_mut().take(p - 1).enumerate() {
            *g += resid * data.get(i, regressor_node(s, k));
        }
        grad[p - 1] += resid;
    }
    grad.iter_mut().for_each(|g| *g /= n as f64);
    Ok(grad)
}

/// Negative Hessian `(1/n) sum_i D''(eta_i) x0 x0^T` with `x0 = (x_{-s}, 1)`.
pub fn conditional_neg_hessian(
    cond: Conditional,
    theta_s: &[f64],
    alpha1: f64,
    data: &Dataset,
    s: usize,
) -> Result<DMatrix<f64>> {
    check_coefficients(data, s, theta_s)?;
    let n = data.n();
    let p = data.p();
    let mut q = DMatrix::zeros(p, p);
    let mut x0 = DVector::zeros(p);
    for i in 0..n {
        let eta = row_eta(data, s, theta_s, alpha1, i);
        let (_, d2, _) = cond.derivs(eta)?;
        for k in 0..p - 1 {
            x0[k] = data.get(i, regressor_node(s, k));
        }
        x0[p - 1] = 1.0;
        q.ger(d2, &x0, &x0, 1.0);
    }
    Ok(q / n as f64)
}
