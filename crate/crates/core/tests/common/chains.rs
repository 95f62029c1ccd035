use mgm::gibbs::GibbsConfig;
use mgm::model::{EdgeMatrix, ModelSpec, NodeParams};
use mgm::NodeType;

pub fn bernoulli_model(alpha1: &[f64], edges: &[(usize, usize, f64)]) -> ModelSpec {
    let p = alpha1.len();
    let mut e = EdgeMatrix::zeros(p);
    for &(s, t, v) in edges {
        e.set(s, t, v);
    }
    ModelSpec::new(
        vec![NodeType::Bernoulli; p],
        alpha1.iter().map(|&a| NodeParams::new(a, 0.0)).collect(),
        e,
    )
    .unwrap()
}

/// Small pure-Bernoulli models for the enumeration check.
pub fn enumeration_models() -> Vec<ModelSpec> {
    vec![
        bernoulli_model(&[0.0, 0.0, 0.0], &[(0, 1, 0.4), (1, 2, -0.3)]),
        bernoulli_model(&[0.2, -0.1, 0.0, 0.3], &[(0, 1, 0.5), (1, 2, 0.3), (2, 3, -0.4), (0, 3, 0.2)]),
        bernoulli_model(&[0.1, 0.0, -0.2, 0.0], &[(0, 2, 0.6), (1, 3, -0.5), (0, 1, 0.1)]),
    ]
}

pub fn chain_config(n: usize, thin: usize, seed: u64) -> GibbsConfig {
    GibbsConfig {
        burn_in: 500,
        thin,
        n_samples: n,
        seed,
        ..GibbsConfig::default()
    }
}

pub fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

pub fn lag1_autocorrelation(v: &[f64]) -> f64 {
    let n = v.len();
    let m = v.iter().sum::<f64>() / n as f64;
    let den: f64 = v.iter().map(|x| (x - m).powi(2)).sum();
    let num: f64 = (1..n).map(|i| (v[i] - m) * (v[i - 1] - m)).sum();
    num / den
}

/// Exact joint probabilities of a pure Bernoulli model, states indexed by
/// bit s = 1 meaning x_s = +1.
pub fn enumerate(model: &ModelSpec) -> Vec<f64> {
    let p = model.p();
    let weights: Vec<f64> = (0..1usize << p)
        .map(|code| {
            let x: Vec<f64> = (0..p).map(|s| if code >> s & 1 == 1 { 1.0 } else { -1.0 }).collect();
            let mut e = 0.0;
            for s in 0..p {
                e += model.params[s].alpha1 * x[s];
                for t in s + 1..p {
                    e += model.edges.get(s, t) * x[s] * x[t];
                }
            }
            e.exp()
        })
        .collect();
    let z: f64 = weights.iter().sum();
    weights.iter().map(|w| w / z).collect()
}

pub fn state_code(row: &[f64]) -> usize {
    row.iter().enumerate().map(|(s, &v)| if v > 0.0 { 1 << s } else { 0 }).sum()
}
