//! File formats: JSON model specs, CSV datasets and edge lists, JSON fit
//! reports.
//!
//! Floats are written in Rust's shortest round-trip form, so every value
//! parses back to the identical `f64`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::combine::{BoundEstimates, EdgeSet};
use crate::error::{Error, Result};
use crate::family::NodeType;
use crate::fit::NeighborhoodFit;
use crate::model::{Dataset, EdgeMatrix, ModelSpec, NodeParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpecFile {
    pub p: usize,
    pub types: Vec<NodeType>,
    pub alpha1: Vec<f64>,
    pub alpha2: Vec<f64>,
    pub theta: Vec<Vec<f64>>,
}

impl From<&ModelSpec> for ModelSpecFile {
    fn from(model: &ModelSpec) -> Self {
        Self {
            p: model.p(),
            types: model.types.clone(),
            alpha1: model.params.iter().map(|q| q.alpha1).collect(),
            alpha2: model.params.iter().map(|q| q.alpha2).collect(),
            theta: model.edges.rows(),
        }
    }
}

impl TryFrom<ModelSpecFile> for ModelSpec {
    type Error = Error;

    fn try_from(file: ModelSpecFile) -> Result<Self> {
        let p = file.p;
        if file.types.len() != p || file.alpha1.len() != p || file.alpha2.len() != p {
            return Err(Error::Parse(format!(
                "p = {p} but got {} types, {} alpha1, {} alpha2",
                file.types.len(),
                file.alpha1.len(),
                file.alpha2.len()
            )));
        }
        if file.theta.len() != p || file.theta.iter().any(|r| r.len() != p) {
            return Err(Error::Parse(format!("theta must be {p}x{p}")));
        }
        let edges = EdgeMatrix::from_rows(&file.theta).map_err(|e| Error::Parse(e.to_string()))?;
        let params = file
            .alpha1
            .iter()
            .zip(&file.alpha2)
            .map(|(&a1, &a2)| NodeParams::new(a1, a2))
            .collect();
        ModelSpec::new(file.types, params, edges).map_err(|e| Error::Parse(e.to_string()))
    }
}

pub fn model_to_json(model: &ModelSpec) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ModelSpecFile::from(model))?)
}

/// Parses a model document; any structural problem is a [`Error::Parse`].
pub fn model_from_json(text: &str) -> Result<ModelSpec> {
    let file: ModelSpecFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("model JSON: {e}")))?;
    ModelSpec::try_from(file)
}

pub fn write_model(path: &Path, model: &ModelSpec) -> Result<()> {
    let mut text = model_to_json(model)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<ModelSpec> {
    model_from_json(&fs::read_to_string(path)?)
}

/// CSV with a header of type tags (`g`, `b`, `p`, `e`) and one observation
/// per row.
pub fn write_dataset<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(data.types().iter().map(|k| k.tag().to_string()))?;
    for i in 0..data.n() {
        w.write_record((0..data.p()).map(|s| format!("{}", data.get(i, s))))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let types = r
        .headers()?
        .iter()
        .map(|h| {
            let h = h.trim();
            let mut chars = h.chars();
            match (chars.next().and_then(NodeType::from_tag), chars.next()) {
                (Some(kind), None) => Ok(kind),
                _ => Err(Error::Parse(format!("unknown node type tag '{h}'"))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if types.is_empty() {
        return Err(Error::Parse("dataset header is empty".into()));
    }
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?;
        let row = record
            .iter()
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("row {}: '{v}' is not a number", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Dataset::from_rows(&rows, types)
}

pub fn write_dataset_file(path: &Path, data: &Dataset) -> Result<()> {
    write_dataset(fs::File::create(path)?, data)
}

pub fn read_dataset_file(path: &Path) -> Result<Dataset> {
    read_dataset(fs::File::open(path)?)
}

/// Zero-based `s,t` rows with `s < t`.
pub fn write_edges<W: Write>(writer: W, edges: &EdgeSet) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["s", "t"])?;
    for (s, t) in edges.iter() {
        w.write_record([s.to_string(), t.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_edges<R: Read>(reader: R, p: usize) -> Result<EdgeSet> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = EdgeSet::new(p);
    for record in r.deserialize() {
        let (s, t): (usize, usize) = record?;
        if s >= p || t >= p {
            return Err(Error::IndexOutOfRange { index: s.max(t), p });
        }
        out.insert(s, t);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeReport {
    pub s: usize,
    pub kind: NodeType,
    pub lambda: f64,
    pub support_size: usize,
    pub converged: bool,
    pub iterations: usize,
    pub alpha1_hat: f64,
    pub theta_hat: Vec<f64>,
}

impl From<&NeighborhoodFit> for NodeReport {
    fn from(fit: &NeighborhoodFit) -> Self {
        Self {
            s: fit.s,
            kind: NodeType::Gaussian,
            lambda: fit.lambda,
            support_size: fit.support_size(),
            converged: fit.converged,
            iterations: fit.iterations,
            alpha1_hat: fit.alpha1_hat,
            theta_hat: fit.theta_hat.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub combine: String,
    /// Lambda per node type.
    pub lambdas: BTreeMap<NodeType, f64>,
    pub nodes: Vec<NodeReport>,
    /// Plug-in Poisson bounds keyed by node.
    pub b_p: BTreeMap<usize, f64>,
    /// Plug-in Exponential bounds keyed by node.
    pub b_e: BTreeMap<usize, f64>,
    pub edges: usize,
    /// Nodes whose fit failed, with the error message.
    pub failures: BTreeMap<usize, String>,
}

impl FitReport {
    pub fn new(
        combine: String,
        lambdas: BTreeMap<NodeType, f64>,
        fits: &[NeighborhoodFit],
        types: &[NodeType],
        bounds: &BoundEstimates,
        edges: usize,
        failures: BTreeMap<usize, String>,
    ) -> Self {
        let nodes = fits
            .iter()
            .map(|f| NodeReport {
                kind: types[f.s],
                ..NodeReport::from(f)
            })
            .collect();
        Self {
            combine,
            lambdas,
            nodes,
            b_p: bounds.b_p.clone(),
            b_e: bounds.b_e.clone(),
            edges,
            failures,
        }
    }
}
