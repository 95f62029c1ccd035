use mgm::compat::{joint_unnormalized_logdensity, Verdict};
use mgm::model::{EdgeMatrix, ModelSpec, NodeParams};
use mgm::NodeType::{self, *};

use Verdict::{CompatibleOnly as C, Incompatible as I, StronglyCompatible as S};

pub fn params(kind: NodeType, alpha1: f64) -> NodeParams {
    NodeParams::new(alpha1, if kind == Gaussian { -1.0 } else { 0.0 })
}

fn default_alpha1(kind: NodeType) -> f64 {
    if kind == Exponential {
        -1.0
    } else {
        0.0
    }
}

pub fn model(types: &[NodeType], params: Vec<NodeParams>, edges: &[(usize, usize, f64)]) -> ModelSpec {
    let mut e = EdgeMatrix::zeros(types.len());
    for &(s, t, v) in edges {
        e.set(s, t, v);
    }
    ModelSpec::new(types.to_vec(), params, e).unwrap()
}

pub fn pair(a: NodeType, b: NodeType, theta: f64) -> ModelSpec {
    model(
        &[a, b],
        vec![params(a, default_alpha1(a)), params(b, default_alpha1(b))],
        &[(0, 1, theta)],
    )
}

pub const SIGNS: [f64; 3] = [-0.5, 0.0, 0.5];

/// Verdicts for theta in [`SIGNS`] with alpha2 = -1 and Exponential alpha1 = -1.
pub fn pair_table() -> [(NodeType, NodeType, [Verdict; 3]); 10] {
    [
        (Gaussian, Gaussian, [S, S, S]),
        (Gaussian, Bernoulli, [S, S, S]),
        (Gaussian, Poisson, [C, S, C]),
        (Gaussian, Exponential, [I, S, I]),
        (Bernoulli, Bernoulli, [S, S, S]),
        (Bernoulli, Poisson, [S, S, S]),
        (Bernoulli, Exponential, [S, S, S]),
        (Poisson, Poisson, [S, S, C]),
        (Poisson, Exponential, [S, S, I]),
        (Exponential, Exponential, [S, S, I]),
    ]
}

/// Two-node models at the edges of the parameter constraints.
pub fn boundary_cases() -> Vec<(String, ModelSpec, Verdict)> {
    let gg = |alpha2: f64, theta: f64| {
        model(
            &[Gaussian, Gaussian],
            vec![NodeParams::new(0.0, alpha2), NodeParams::new(0.0, -1.0)],
            &[(0, 1, theta)],
        )
    };
    let be = |alpha1: f64, theta: f64| {
        model(
            &[Bernoulli, Exponential],
            vec![params(Bernoulli, 0.0), NodeParams::new(alpha1, 0.0)],
            &[(0, 1, theta)],
        )
    };
    let pe = |alpha1: f64, theta: f64| {
        model(
            &[Poisson, Exponential],
            vec![params(Poisson, 0.0), NodeParams::new(alpha1, 0.0)],
            &[(0, 1, theta)],
        )
    };
    let mut out = Vec::new();
    // Eigenvalues -1 +- theta: singular at |theta| = 1.
    for (alpha2, theta, want) in [
        (-1.0, 1.0, C),
        (-1.0, -1.0, C),
        (-1.0, 0.999, S),
        (-1.0, 1.5, C),
        (0.0, 0.0, I),
        (0.3, 0.0, I),
        (-1e-3, 0.0, S),
    ] {
        out.push((format!("gaussian-gaussian alpha2={alpha2} theta={theta}"), gg(alpha2, theta), want));
    }
    // Exponential mass: alpha1 + sum |theta| over Bernoulli neighbours < 0.
    for (alpha1, theta, want) in [
        (-1.0, 1.0, I),
        (-1.0, -1.0, I),
        (-1.0, 0.999, S),
        (-0.3, 0.5, I),
        (0.0, 0.0, I),
        (-1e-3, 0.0, S),
    ] {
        out.push((format!("bernoulli-exponential alpha1={alpha1} theta={theta}"), be(alpha1, theta), want));
    }
    for (alpha1, theta, want) in [(0.0, -0.5, I), (-1e-3, -0.5, S), (-1.0, 1e-9, I)] {
        out.push((format!("poisson-exponential alpha1={alpha1} theta={theta}"), pe(alpha1, theta), want));
    }
    out
}

/// Support points with log quadrature weights for one node at cutoff level c.
fn axis(kind: NodeType, c: f64) -> Vec<(f64, f64)> {
    const H: f64 = 0.25;
    let midpoints = |lo: f64, hi: f64| {
        let m = ((hi - lo) / H).round() as usize;
        (0..m).map(move |i| (lo + (i as f64 + 0.5) * H, H.ln())).collect::<Vec<_>>()
    };
    match kind {
        Bernoulli => vec![(-1.0, 0.0), (1.0, 0.0)],
        Poisson => (0..=c as usize).map(|k| (k as f64, 0.0)).collect(),
        Gaussian => midpoints(-c, c),
        Exponential => midpoints(0.0, 2.0 * c),
    }
}

/// Log of the truncated integral of exp(joint log density) over the product
/// support at cutoff level c.
pub fn truncated_log_mass(m: &ModelSpec, c: f64) -> f64 {
    let axes: Vec<Vec<(f64, f64)>> = m.types.iter().map(|&k| axis(k, c)).collect();
    let p = axes.len();
    let mut idx = vec![0usize; p];
    let mut x = vec![0.0; p];
    let (mut max, mut sum) = (f64::NEG_INFINITY, 0.0);
    loop {
        let mut w = 0.0;
        for s in 0..p {
            x[s] = axes[s][idx[s]].0;
            w += axes[s][idx[s]].1;
        }
        let v = joint_unnormalized_logdensity(m, &x).unwrap() + w;
        if v > max {
            sum = sum * (max - v).exp() + 1.0;
            max = v;
        } else {
            sum += (v - max).exp();
        }
        let mut s = 0;
        loop {
            if s == p {
                return max + sum.ln();
            }
            idx[s] += 1;
            if idx[s] < axes[s].len() {
                break;
            }
            idx[s] = 0;
            s += 1;
        }
    }
}

/// Whether the truncated mass settles between cutoffs 50 and 100, or keeps
/// growing. None if it does neither clearly.
pub fn mass_is_finite(m: &ModelSpec) -> Option<bool> {
    let (mid, top) = (truncated_log_mass(m, 50.0), truncated_log_mass(m, 100.0));
    if (top - mid).abs() < 1e-6 {
        Some(true)
    } else if top - mid > 0.5 {
        Some(false)
    } else {
        None
    }
}

/// Twenty two- and three-node models, roughly half strongly compatible.
pub fn oracle_cases() -> Vec<ModelSpec> {
    let p = params;
    vec![
        pair(Gaussian, Gaussian, 0.5),
        pair(Gaussian, Gaussian, 1.5),
        pair(Poisson, Poisson, -0.4),
        pair(Poisson, Poisson, 0.2),
        pair(Gaussian, Poisson, 0.5),
        model(&[Gaussian, Exponential], vec![p(Gaussian, 0.0), p(Exponential, -1.0)], &[(0, 1, 0.1)]),
        pair(Poisson, Exponential, 0.2),
        model(&[Exponential, Exponential], vec![p(Exponential, -1.0), p(Exponential, -1.0)], &[(0, 1, 0.3)]),
        model(&[Bernoulli, Exponential], vec![p(Bernoulli, 0.0), p(Exponential, -0.3)], &[(0, 1, 0.5)]),
        model(&[Bernoulli, Exponential], vec![p(Bernoulli, 0.0), p(Exponential, -1.0)], &[(0, 1, 0.5)]),
        pair(Gaussian, Bernoulli, 2.0),
        pair(Poisson, Exponential, -0.5),
        pair(Exponential, Exponential, -0.5),
        model(&[Gaussian, Bernoulli], vec![NodeParams::new(0.0, 0.0), p(Bernoulli, 0.0)], &[]),
        model(
            &[Gaussian, Gaussian, Bernoulli],
            vec![p(Gaussian, 0.2), p(Gaussian, -0.1), p(Bernoulli, 0.0)],
            &[(0, 1, 0.5), (0, 2, 1.0), (1, 2, -1.0)],
        ),
        model(
            &[Poisson, Poisson, Bernoulli],
            vec![p(Poisson, 0.5), p(Poisson, 0.0), p(Bernoulli, 0.3)],
            &[(0, 1, -0.3), (1, 2, 0.5)],
        ),
        model(
            &[Gaussian, Poisson, Bernoulli],
            vec![p(Gaussian, 0.0), p(Poisson, 0.0), p(Bernoulli, 0.0)],
            &[(0, 1, 0.3), (1, 2, 0.4)],
        ),
        model(
            &[Bernoulli, Bernoulli, Exponential],
            vec![p(Bernoulli, 0.0), p(Bernoulli, 0.0), p(Exponential, -1.0)],
            &[(0, 2, 0.4), (1, 2, -0.4)],
        ),
        model(
            &[Bernoulli, Bernoulli, Exponential],
            vec![p(Bernoulli, 0.0), p(Bernoulli, 0.0), p(Exponential, -1.0)],
            &[(0, 2, 0.6), (1, 2, -0.6)],
        ),
        model(
            &[Poisson, Exponential, Bernoulli],
            vec![p(Poisson, 0.0), p(Exponential, -1.0), p(Bernoulli, 0.0)],
            &[(0, 1, -0.2), (1, 2, 0.5)],
        ),
    ]
}
