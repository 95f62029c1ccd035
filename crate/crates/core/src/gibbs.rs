//! Systematic-scan Gibbs sampler over the node conditionals.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use serde::{Deserialize, Serialize};

use nalgebra::DMatrix;

use crate::compat::{check_compatibility, Verdict};
use crate::error::{Error, Result};
use crate::family::NodeType;
use crate::model::{Dataset, ModelSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Gaussian 0, Bernoulli +1, Poisson 0, Exponential 1.
    #[default]
    SupportDefault,
    Provided(Vec<f64>),
}

/// What to do when the model is not strongly compatible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CompatPolicy {
    #[default]
    Enforce,
    Warn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    /// Full sweeps discarded before the first kept sample.
    pub burn_in: usize,
    /// Full sweeps between kept samples.
    pub thin: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub init: InitialState,
    pub compat: CompatPolicy,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            burn_in: 3000,
            thin: 500,
            n_samples: 100,
            seed: 0,
            init: InitialState::SupportDefault,
            compat: CompatPolicy::Enforce,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thin < 1 {
            return Err(Error::InvalidConfig("thin must be >= 1".into()));
        }
        if self.n_samples < 1 {
            return Err(Error::InvalidConfig("n_samples must be >= 1".into()));
        }
        Ok(())
    }
}

/// One draw from a node conditional with natural parameter `eta`.
pub fn sample_conditional<R: Rng + ?Sized>(
    kind: NodeType,
    eta: f64,
    alpha2: f64,
    rng: &mut R,
) -> Result<f64> {
    let domain = || Error::Domain { kind, eta };
    if !eta.is_finite() {
        return Err(domain());
    }
    match kind {
        NodeType::Gaussian => {
            if !(alpha2 < 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "Gaussian conditional needs alpha2 < 0, got {alpha2}"
                )));
            }
            let precision = -alpha2;
            let normal = Normal::new(eta / precision, precision.powf(-0.5)).map_err(|_| domain())?;
            Ok(normal.sample(rng))
        }
        NodeType::Bernoulli => {
            let p_plus = 1.0 / (1.0 + (-2.0 * eta).exp());
            Ok(if rng.random::<f64>() < p_plus { 1.0 } else { -1.0 })
        }
        NodeType::Poisson => {
            let rate = eta.exp();
            if rate < 1e-300 {
                return Ok(0.0);
            }
            let poisson = Poisson::new(rate).map_err(|_| domain())?;
            Ok(poisson.sample(rng))
        }
        NodeType::Exponential => {
            if !(eta < 0.0) {
                return Err(domain());
            }
            let exp = Exp::new(-eta).map_err(|_| domain())?;
            // A zero draw is possible in floating point but outside the support.
            Ok(exp.sample(rng).max(f64::MIN_POSITIVE))
        }
    }
}

fn initial_state(model: &ModelSpec, init: &InitialState) -> Result<Vec<f64>> {
    match init {
        InitialState::SupportDefault => Ok(model
            .types
            .iter()
            .map(|k| match k {
                NodeType::Gaussian | NodeType::Poisson => 0.0,
                NodeType::Bernoulli | NodeType::Exponential => 1.0,
            })
            .collect()),
        InitialState::Provided(x) => {
            if x.len() != model.p() {
                return Err(Error::Dimension(format!(
                    "initial state has length {}, expected {}",
                    x.len(),
                    model.p()
                )));
            }
            for (s, (&v, &kind)) in x.iter().zip(&model.types).enumerate() {
                if !kind.in_support(v) {
                    return Err(Error::Support { kind, node: s, value: v });
                }
            }
            Ok(x.clone())
        }
    }
}

/// Runs the chain and keeps the state after `burn_in + k * thin` sweeps for
/// k = 1..=n_samples. Each sweep resamples nodes in ascending index order.
pub fn run_chain(model: &ModelSpec, config: &GibbsConfig) -> Result<Dataset> {
    config.validate()?;
    let report = check_compatibility(model);
    if report.verdict != Verdict::StronglyCompatible {
        let detail = report
            .violations
            .iter()
            .map(|v| v.message.as_str())
            .collect::<Vec<_>>()
            .join("; ");
        match config.compat {
            CompatPolicy::Enforce => return Err(Error::NotStronglyCompatible(detail)),
            CompatPolicy::Warn => warn!("sampling from a {} model: {detail}", report.verdict),
        }
    }

    let p = model.p();
    let neighbours: Vec<Vec<(usize, f64)>> = (0..p)
        .map(|s| {
            model
                .edges
                .neighbours(s)
                .into_iter()
                .map(|t| (t, model.edges.get(t, s)))
                .collect()
        })
        .collect();
    let mut state = initial_state(model, &config.init)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let sweep = |state: &mut Vec<f64>, rng: &mut ChaCha8Rng| -> Result<()> {
        for s in 0..p {
            let eta = model.params[s].alpha1
                + neighbours[s].iter().map(|&(t, th)| th * state[t]).sum::<f64>();
            state[s] = sample_conditional(model.types[s], eta, model.params[s].alpha2, rng)?;
        }
        Ok(())
    };

    for _ in 0..config.burn_in {
        sweep(&mut state, &mut rng)?;
    }
    let mut x = DMatrix::zeros(config.n_samples, p);
    for i in 0..config.n_samples {
        for _ in 0..config.thin {
            sweep(&mut state, &mut rng)?;
        }
        x.row_mut(i).copy_from_slice(&state);
    }
    Dataset::new(x, model.types.clone())
}
