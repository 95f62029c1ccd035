//! Mixed graphical models with Gaussian, Bernoulli, Poisson and Exponential
//! nodes: compatibility checks, Gibbs sampling, l1-penalised neighbourhood
//! selection with BIC tuning, and type-aware edge combination.

pub mod cli;
pub mod combine;
pub mod compat;
pub mod error;
pub mod family;
pub mod fit;
pub mod gibbs;
pub mod harness;
pub mod io;
pub mod model;
pub mod simgen;

pub use combine::{EdgeSet, Fallback};
pub use compat::{check_compatibility, CompatReport, Verdict};
pub use error::{Error, Result};
pub use family::{Conditional, NodeType};
pub use fit::{fit_node, FitConfig, NeighborhoodFit};
pub use gibbs::{run_chain, GibbsConfig};
pub use model::{Dataset, EdgeMatrix, ModelSpec, NodeParams};
