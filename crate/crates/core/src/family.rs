//! Exponential-family node-conditional distributions.
//!
//! Every node's conditional density has the form
//! `exp{ base(x) + eta * x - D(eta) }` with natural parameter
//! `eta = alpha1 + sum_t theta_ts x_t`. The four supported families differ in
//! their support, base measure and log-partition function `D`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeType {
    Gaussian,
    Bernoulli,
    Poisson,
    Exponential,
}

impl NodeType {
    pub const ALL: [NodeType; 4] = [
        NodeType::Gaussian,
        NodeType::Bernoulli,
        NodeType::Poisson,
        NodeType::Exponential,
    ];

    /// Single-character tag used in dataset headers.
    pub fn tag(self) -> char {
        match self {
            NodeType::Gaussian => 'g',
            NodeType::Bernoulli => 'b',
            NodeType::Poisson => 'p',
            NodeType::Exponential => 'e',
        }
    }

    pub fn from_tag(c: char) -> Option<NodeType> {
        match c.to_ascii_lowercase() {
            'g' => Some(NodeType::Gaussian),
            'b' => Some(NodeType::Bernoulli),
            'p' => Some(NodeType::Poisson),
            'e' => Some(NodeType::Exponential),
            _ => None,
        }
    }

    /// Bernoulli nodes take values in {-1, +1}, Poisson in the non-negative
    /// integers, Exponential in the positive reals.
    pub fn in_support(self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        match self {
            NodeType::Gaussian => true,
            NodeType::Bernoulli => x == 1.0 || x == -1.0,
            NodeType::Poisson => x >= 0.0 && x.fract() == 0.0,
            NodeType::Exponential => x > 0.0,
        }
    }

    /// Default quadratic node-potential coefficient.
    pub fn default_alpha2(self) -> f64 {
        match self {
            NodeType::Gaussian => -1.0,
            _ => 0.0,
        }
    }
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            NodeType::Gaussian => "gaussian",
            NodeType::Bernoulli => "bernoulli",
            NodeType::Poisson => "poisson",
            NodeType::Exponential => "exponential",
        };
        f.write_str(name)
    }
}

impl FromStr for NodeType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "gaussian" => Ok(NodeType::Gaussian),
            "bernoulli" => Ok(NodeType::Bernoulli),
            "poisson" => Ok(NodeType::Poisson),
            "exponential" => Ok(NodeType::Exponential),
            _ if lower.chars().count() == 1 => lower
                .chars()
                .next()
                .and_then(NodeType::from_tag)
                .ok_or_else(|| Error::Parse(format!("unknown node type '{s}'"))),
            _ => Err(Error::Parse(format!("unknown node type '{s}'"))),
        }
    }
}

/// A node's conditional family together with its fixed quadratic coefficient.
///
/// `alpha2` only matters for Gaussian nodes, where the conditional is
/// `N(eta / -alpha2, 1 / -alpha2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conditional {
    pub kind: NodeType,
    pub alpha2: f64,
}

impl Conditional {
    pub fn new(kind: NodeType, alpha2: f64) -> Self {
        Self { kind, alpha2 }
    }

    pub fn standard(kind: NodeType) -> Self {
        Self::new(kind, kind.default_alpha2())
    }

    pub fn is_feasible(&self, eta: f64) -> bool {
        match self.kind {
            NodeType::Exponential => eta < 0.0,
            NodeType::Gaussian => self.alpha2 < 0.0 && eta.is_finite(),
            _ => eta.is_finite(),
        }
    }

    fn check(&self, eta: f64) -> Result<()> {
        if self.is_feasible(eta) {
            Ok(())
        } else {
            Err(Error::Domain {
                kind: self.kind,
                eta,
            })
        }
    }

    /// Log-partition function D(eta).
    pub fn log_partition(&self, eta: f64) -> Result<f64> {
        self.check(eta)?;
        Ok(match self.kind {
            NodeType::Gaussian => {
                -eta * eta / (2.0 * self.alpha2) + 0.5 * LN_2PI - 0.5 * (-self.alpha2).ln()
            }
            NodeType::Bernoulli => {
                let a = eta.abs();
                a + (-2.0 * a).exp().ln_1p()
            }
            NodeType::Poisson => eta.exp(),
            NodeType::Exponential => -(-eta).ln(),
        })
    }

    /// First three derivatives of D at eta.
    pub fn derivs(&self, eta: f64) -> Result<(f64, f64, f64)> {
        self.check(eta)?;
        Ok(match self.kind {
            NodeType::Gaussian => (-eta / self.alpha2, -1.0 / self.alpha2, 0.0),
            NodeType::Bernoulli => {
                let th = eta.tanh();
                let sech2 = 1.0 - th * th;
                (th, sech2, -2.0 * th * sech2)
            }
            NodeType::Poisson => {
                let e = eta.exp();
                (e, e, e)
            }
            NodeType::Exponential => (-1.0 / eta, 1.0 / (eta * eta), -2.0 / (eta * eta * eta)),
        })
    }

    /// Conditional mean D'(eta) without the domain check's error path.
    pub(crate) fn mean_unchecked(&self, eta: f64) -> f64 {
        match self.kind {
            NodeType::Gaussian => -eta / self.alpha2,
            NodeType::Bernoulli => eta.tanh(),
            NodeType::Poisson => eta.exp(),
            NodeType::Exponential => -1.0 / eta,
        }
    }

    /// `D(b + h) - D(b)` for feasible b and b + h. Accurate when h is small
    /// even if D itself is large, provided h is computed directly rather
    /// than as a difference of two natural parameters.
    pub(crate) fn log_partition_step(&self, b: f64, h: f64) -> f64 {
        match self.kind {
            NodeType::Gaussian => -h * (2.0 * b + h) / (2.0 * self.alpha2),
            NodeType::Bernoulli => {
                if h.abs() < 1.0 {
                    // log(cosh(b + h) / cosh(b))
                    let half = (0.5 * h).sinh();
                    (2.0 * half * half + b.tanh() * h.sinh()).ln_1p()
                } else {
                    let a = b + h;
                    let tail = |x: f64| (-2.0 * x.abs()).exp().ln_1p();
                    (a.abs() - b.abs()) + (tail(a) - tail(b))
                }
            }
            NodeType::Poisson => b.exp() * h.exp_m1(),
            NodeType::Exponential => -(h / b).ln_1p(),
        }
    }

    /// `D(b + h) - D(b) - D'(b) h`, the remainder of the first-order
    /// expansion of D around b. Never negative up to rounding.
    pub(crate) fn bregman(&self, b: f64, h: f64) -> f64 {
        match self.kind {
            NodeType::Gaussian => -h * h / (2.0 * self.alpha2),
            NodeType::Bernoulli => {
                let t = b.tanh();
                if h.abs() < 1e-3 {
                    let v = 1.0 - t * t;
                    h * h * v * (0.5 - h * t / 3.0 - h * h * (1.0 - 3.0 * t * t) / 12.0)
                } else {
                    self.log_partition_step(b, h) - t * h
                }
            }
            NodeType::Poisson => b.exp() * exp_remainder(h),
            NodeType::Exponential => {
                let u = h / b;
                if u.abs() < 1e-3 {
                    u * u * (0.5 - u / 3.0 + u * u / 4.0 - u * u * u / 5.0)
                } else {
                    u - u.ln_1p()
                }
            }
        }
    }

    /// Terms of the log-density that depend on x alone: `alpha2 x^2 / 2`
    /// for Gaussian nodes, `-log(x!)` for Poisson nodes.
    pub fn base_measure(&self, x: f64) -> f64 {
        match self.kind {
            NodeType::Gaussian => 0.5 * self.alpha2 * x * x,
            NodeType::Poisson => -ln_factorial(x),
            _ => 0.0,
        }
    }

    /// Natural parameter that makes the conditional mean equal `mean`, i.e.
    /// the intercept-only maximum likelihood estimate. Boundary means are
    /// pulled just inside the support so the result is always finite.
    pub fn inverse_mean(&self, mean: f64) -> f64 {
        const EDGE: f64 = 1e-10;
        match self.kind {
            NodeType::Gaussian => -self.alpha2 * mean,
            NodeType::Bernoulli => mean.clamp(-1.0 + EDGE, 1.0 - EDGE).atanh(),
            NodeType::Poisson => mean.max(EDGE).ln(),
            NodeType::Exponential => -1.0 / mean.max(EDGE),
        }
    }
}

/// Log-partition D(eta) with the default Gaussian coefficient alpha2 = -1.
pub fn log_partition(kind: NodeType, eta: f64) -> Result<f64> {
    Conditional::standard(kind).log_partition(eta)
}

/// (D', D'', D''') at eta with the default Gaussian coefficient alpha2 = -1.
pub fn log_partition_derivs(kind: NodeType, eta: f64) -> Result<(f64, f64, f64)> {
    Conditional::standard(kind).derivs(eta)
}

pub(crate) fn ln_factorial(x: f64) -> f64 {
    let k = x as u64;
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// `e^h - 1 - h` without cancellation for small h.
fn exp_remainder(h: f64) -> f64 {
    if h.abs() < 1e-3 {
        h * h * (0.5 + h / 6.0 + h * h / 24.0 + h * h * h / 120.0)
    } else {
        h.exp_m1() - h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn partition_differences() {
        for kind in NodeType::ALL {
            let c = Conditional::new(kind, kind.default_alpha2().min(-0.5));
            for (a, b) in [(-0.7, -0.3), (-2.5, -2.5), (-1.0, -4.0), (-0.2, -0.21)] {
                let direct = c.log_partition(a).unwrap() - c.log_partition(b).unwrap();
                assert!((c.log_partition_step(b, a - b) - direct).abs() < 1e-13, "{kind} {a} {b}");
            }
        }
        // Large Gaussian values: the difference keeps its relative accuracy.
        let g = Conditional::standard(NodeType::Gaussian);
        let a = 1e4 + 1e-6;
        let h = a - 1e4;
        let d = g.log_partition_step(1e4, h);
        assert_relative_eq!(d, h * (1e4 + h / 2.0), max_relative = 1e-12);
    }

    #[test]
    fn bregman_remainder() {
        for kind in NodeType::ALL {
            let c = Conditional::new(kind, kind.default_alpha2().min(-0.5));
            for (a, b) in [(-0.7, -0.3), (-1.0, -4.0), (-0.2, -0.2001), (-2.5, -2.5000004)] {
                let (d1, _, _) = c.derivs(b).unwrap();
                let direct = c.log_partition(a).unwrap() - c.log_partition(b).unwrap() - d1 * (a - b);
                let r = c.bregman(b, a - b);
                assert!(r >= 0.0);
                assert!((r - direct).abs() < 1e-12, "{kind} {a} {b}: {r} vs {direct}");
            }
            // Second-order behaviour for tiny steps.
            let (_, d2, _) = c.derivs(-0.5).unwrap();
            assert_relative_eq!(c.bregman(-0.5, 1e-7), d2 * 1e-14 / 2.0, max_relative = 1e-6);
        }
    }

    #[test]
    fn log_partition_at_zero() {
        assert_relative_eq!(
            log_partition(NodeType::Gaussian, 0.0).unwrap(),
            0.918_938_533_204_672_7,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            log_partition(NodeType::Bernoulli, 0.0).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        assert_eq!(log_partition(NodeType::Poisson, 0.0).unwrap(), 1.0);
        assert_eq!(log_partition(NodeType::Exponential, -1.0).unwrap(), 0.0);
    }

    #[test]
    fn exponential_domain() {
        assert!(matches!(
            log_partition(NodeType::Exponential, 0.0),
            Err(Error::Domain { .. })
        ));
        assert!(log_partition_derivs(NodeType::Exponential, 0.5).is_err());
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(
            log_partition_derivs(NodeType::Gaussian, 3.5).unwrap(),
            (3.5, 1.0, 0.0)
        );
        assert_eq!(
            log_partition_derivs(NodeType::Bernoulli, 0.0).unwrap(),
            (0.0, 1.0, 0.0)
        );
        let (d1, d2, d3) = log_partition_derivs(NodeType::Exponential, -2.0).unwrap();
        assert_relative_eq!(d1, 0.5);
        assert_relative_eq!(d2, 0.25);
        assert_relative_eq!(d3, 0.25);
    }

    #[test]
    fn bernoulli_stable_for_large_eta() {
        let d = log_partition(NodeType::Bernoulli, 800.0).unwrap();
        assert_relative_eq!(d, 800.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_alpha2_scaling() {
        let c = Conditional::new(NodeType::Gaussian, -2.0);
        let (d1, d2, _) = c.derivs(1.0).unwrap();
        assert_relative_eq!(d1, 0.5);
        assert_relative_eq!(d2, 0.5);
        assert_relative_eq!(c.inverse_mean(0.5), 1.0);
    }

    #[test]
    fn tags_round_trip() {
        for kind in NodeType::ALL {
            assert_eq!(NodeType::from_tag(kind.tag()), Some(kind));
            assert_eq!(kind.to_string().parse::<NodeType>().unwrap(), kind);
        }
        assert!("x".parse::<NodeType>().is_err());
    }

    #[test]
    fn supports() {
        assert!(NodeType::Bernoulli.in_support(-1.0));
        assert!(!NodeType::Bernoulli.in_support(0.0));
        assert!(NodeType::Poisson.in_support(3.0));
        assert!(!NodeType::Poisson.in_support(2.5));
        assert!(!NodeType::Exponential.in_support(0.0));
        assert!(!NodeType::Gaussian.in_support(f64::NAN));
    }

    #[test]
    fn ln_factorial_small() {
        assert_eq!(ln_factorial(0.0), 0.0);
        assert_eq!(ln_factorial(1.0), 0.0);
        assert_relative_eq!(ln_factorial(5.0), 120f64.ln(), epsilon = 1e-12);
    }
}
