//! Compatibility of node-conditional specifications.
//!
//! A set of conditionals with symmetric edge potentials is always generated
//! by `g(x) = exp{ sum_s f_s(x_s) + 1/2 sum_s sum_{t != s} theta_ts x_s x_t }`.
//! Whether `g` is a proper (integrable) function depends on restrictions per
//! pair of node types. Restrictions marked as *required* are necessary and
//! sufficient for compatibility; the full set is necessary and sufficient
//! for strong compatibility (`g` is a density).
//!
//! | pair                   | restriction                         | required |
//! |------------------------|-------------------------------------|----------|
//! | Gaussian block         | `Theta_JJ` negative definite        |          |
//! | Gaussian, Poisson      | `theta = 0`                         |          |
//! | Gaussian, Exponential  | `theta = 0`                         | yes      |
//! | Poisson, Poisson       | `theta <= 0`                        |          |
//! | Poisson, Exponential   | `theta <= 0`                        | yes      |
//! | Exponential pair       | `theta <= 0`                        | yes      |
//! | Exponential t          | `sum_{s Bernoulli} |theta_st| < -alpha1_t` | yes |
//! | Gaussian node          | `alpha2 < 0`                        | yes      |
//!
//! Bernoulli nodes are unrestricted.

use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::family::{Conditional, NodeType};
use crate::error::{Error, Result};
use crate::model::ModelSpec;

const ZERO_TOL: f64 = 1e-12;
const EIGEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Incompatible,
    CompatibleOnly,
    StronglyCompatible,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Incompatible => "incompatible",
            Verdict::CompatibleOnly => "compatible",
            Verdict::StronglyCompatible => "strongly compatible",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    GaussianBlockDefinite,
    GaussianPoissonZero,
    GaussianExponentialZero,
    PoissonPoissonNonPositive,
    PoissonExponentialNonPositive,
    ExponentialExponentialNonPositive,
    ExponentialBernoulliMass,
    GaussianAlpha2Negative,
}

impl Rule {
    /// Whether the rule is needed for compatibility (not only for strong
    /// compatibility).
    pub fn required_for_compatibility(self) -> bool {
        !matches!(
            self,
            Rule::GaussianBlockDefinite | Rule::GaussianPoissonZero | Rule::PoissonPoissonNonPositive
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub rule: Rule,
    pub nodes: Vec<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompatReport {
    pub verdict: Verdict,
    pub violations: Vec<Violation>,
}

impl CompatReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        let verdict = if violations.iter().any(|v| v.rule.required_for_compatibility()) {
            Verdict::Incompatible
        } else if violations.is_empty() {
            Verdict::StronglyCompatible
        } else {
            Verdict::CompatibleOnly
        };
        Self {
            verdict,
            violations,
        }
    }
}

/// Gaussian block with the quadratic coefficients on the diagonal.
pub fn gaussian_block(model: &ModelSpec) -> (Vec<usize>, DMatrix<f64>) {
    let idx = model.indices_of(NodeType::Gaussian);
    let m = idx.len();
    let block = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            model.params[idx[i]].alpha2
        } else {
            model.edges.get(idx[i], idx[j])
        }
    });
    (idx, block)
}

/// Largest eigenvalue of a symmetric matrix.
pub(crate) fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn check_compatibility(model: &ModelSpec) -> CompatReport {
    use NodeType::*;
    let p = model.p();
    let mut violations = Vec::new();

    for s in 0..p {
        if model.types[s] == Gaussian && !(model.params[s].alpha2 < 0.0) {
            violations.push(Violation {
                rule: Rule::GaussianAlpha2Negative,
                nodes: vec![s],
                message: format!("Gaussian node {s} has alpha2 = {} (must be < 0)", model.params[s].alpha2),
            });
        }
    }

    let (gauss, block) = gaussian_block(model);
    if !gauss.is_empty() {
        let top = max_eigenvalue(&block);
        if !(top < -EIGEN_TOL) {
            violations.push(Violation {
                rule: Rule::GaussianBlockDefinite,
                nodes: gauss.clone(),
                message: format!("Gaussian block is not negative definite (largest eigenvalue {top:.6e})"),
            });
        }
    }

    for s in 0..p {
        for t in (s + 1)..p {
            let theta = model.edges.get(s, t);
            let (a, b) = if model.types[s] <= model.types[t] {
                (model.types[s], model.types[t])
            } else {
                (model.types[t], model.types[s])
            };
            let rule = match (a, b) {
                (Gaussian, Poisson) if theta.abs() > ZERO_TOL => Some((Rule::GaussianPoissonZero, "must be 0")),
                (Gaussian, Exponential) if theta.abs() > ZERO_TOL => {
                    Some((Rule::GaussianExponentialZero, "must be 0"))
                }
                (Poisson, Poisson) if theta > ZERO_TOL => Some((Rule::PoissonPoissonNonPositive, "must be <= 0")),
                (Poisson, Exponential) if theta > ZERO_TOL => {
                    Some((Rule::PoissonExponentialNonPositive, "must be <= 0"))
                }
                (Exponential, Exponential) if theta > ZERO_TOL => {
                    Some((Rule::ExponentialExponentialNonPositive, "must be <= 0"))
                }
                _ => None,
            };
            if let Some((rule, what)) = rule {
                violations.push(Violation {
                    rule,
                    nodes: vec![s, t],
                    message: format!("{a}-{b} edge ({s}, {t}) = {theta} {what}"),
                });
            }
        }
    }

    for t in model.indices_of(Exponential) {
        let mass: f64 = (0..p)
            .filter(|&s| model.types[s] == Bernoulli)
            .map(|s| model.edges.get(s, t).abs())
            .sum();
        let limit = -model.params[t].alpha1;
        if mass > limit - ZERO_TOL {
            violations.push(Violation {
                rule: Rule::ExponentialBernoulliMass,
                nodes: vec![t],
                message: format!(
                    "Exponential node {t}: Bernoulli edge mass {mass} not below -alpha1 = {limit}"
                ),
            });
        }
    }

    CompatReport::from_violations(violations)
}

/// `sum_s f_s(x_s) + 1/2 sum_s sum_{t != s} theta_ts x_s x_t`: the log of the
/// generating function up to an additive constant.
pub fn joint_unnormalized_logdensity(model: &ModelSpec, x: &[f64]) -> Result<f64> {
    let p = model.p();
    if x.len() != p {
        return Err(Error::Dimension(format!("state has length {}, expected {p}", x.len())));
    }
    let mut total = 0.0;
    for s in 0..p {
        let kind = model.types[s];
        if !kind.in_support(x[s]) {
            return Err(Error::Support {
                kind,
                node: s,
                value: x[s],
            });
        }
        let cond = Conditional::new(kind, model.params[s].alpha2);
        total += model.params[s].alpha1 * x[s] + cond.base_measure(x[s]);
        for t in (s + 1)..p {
            total += model.edges.get(s, t) * x[s] * x[t];
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EdgeMatrix, NodeParams};
    use NodeType::*;

    fn pair(a: NodeType, b: NodeType, alpha1: [f64; 2], theta: f64) -> ModelSpec {
        let mut e = EdgeMatrix::zeros(2);
        e.set(0, 1, theta);
        ModelSpec::new(
            vec![a, b],
            vec![NodeParams::standard(a, alpha1[0]), NodeParams::standard(b, alpha1[1])],
            e,
        )
        .unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(
            check_compatibility(&pair(Gaussian, Gaussian, [0.0, 0.0], 0.5)).verdict,
            Verdict::StronglyCompatible
        );
        assert_eq!(
            check_compatibility(&pair(Poisson, Poisson, [0.0, 0.0], 0.2)).verdict,
            Verdict::CompatibleOnly
        );
        assert_eq!(
            check_compatibility(&pair(Gaussian, Exponential, [0.0, -1.0], 0.1)).verdict,
            Verdict::Incompatible
        );
        let r = check_compatibility(&pair(Exponential, Bernoulli, [-0.3, 0.0], 0.5));
        assert_eq!(r.verdict, Verdict::Incompatible);
        assert_eq!(r.violations[0].rule, Rule::ExponentialBernoulliMass);
    }

    #[test]
    fn gaussian_alpha2_required() {
        let m = ModelSpec::new(
            vec![Gaussian],
            vec![NodeParams::new(0.0, 0.5)],
            EdgeMatrix::zeros(1),
        )
        .unwrap();
        let r = check_compatibility(&m);
        assert_eq!(r.verdict, Verdict::Incompatible);
        assert!(r.violations.iter().any(|v| v.rule == Rule::GaussianAlpha2Negative));
    }

    #[test]
    fn verdict_invariants() {
        let r = check_compatibility(&pair(Bernoulli, Bernoulli, [0.0, 0.0], 4.0));
        assert_eq!(r.verdict, Verdict::StronglyCompatible);
        assert!(r.violations.is_empty());
    }

    #[test]
    fn joint_logdensity_examples() {
        let m = pair(Gaussian, Poisson, [0.0, 0.0], 0.0);
        assert_eq!(joint_unnormalized_logdensity(&m, &[0.0, 0.0]).unwrap(), 0.0);
        let m = pair(Bernoulli, Bernoulli, [0.0, 0.0], 0.3);
        assert!((joint_unnormalized_logdensity(&m, &[1.0, 1.0]).unwrap() - 0.3).abs() < 1e-15);
        assert!(joint_unnormalized_logdensity(&m, &[0.0, 1.0]).is_err());
    }
}
