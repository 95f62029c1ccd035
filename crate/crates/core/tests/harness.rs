use mgm::fit::{log_spaced, FitConfig};
use mgm::gibbs::{run_chain, GibbsConfig};
use mgm::harness::{
    bic_edge_estimate, curve, interpolate, irrepresentability_diagnostic, precision_recall, run_edge_count_comparison,
    run_recovery_curve, Combiner, ExperimentConfig, Scope, Subgraph,
};
use mgm::model::{regressor_node, EdgeMatrix, ModelSpec, NodeParams};
use mgm::simgen::{generate_model, SimGraphConfig};
use mgm::{Dataset, EdgeSet, NodeType};
use nalgebra::{DMatrix, DVector};

fn small_comparison(kind: fn() -> ExperimentConfig, p: usize) -> ExperimentConfig {
    ExperimentConfig {
        p,
        n: 80,
        replicates: 2,
        burn_in: 100,
        thin: 5,
        sweep_scales: log_spaced(4.0, 0.05, 9),
        ..kind()
    }
}

#[test]
fn edge_counts_are_consistent() {
    for config in [
        small_comparison(ExperimentConfig::gaussian_bernoulli_comparison, 10),
        small_comparison(ExperimentConfig::poisson_bernoulli_rules, 12),
    ] {
        let rows = run_edge_count_comparison(&config).unwrap();
        assert!(!rows.is_empty());
        for r in &rows {
            assert!(r.correct_edges <= r.estimated_edges + 1e-12, "{r:?}");
            assert!(r.correct_edges <= r.true_edges + 1e-12, "{r:?}");
            if r.estimated_edges == 0.0 {
                assert_eq!(r.correct_edges, 0.0);
            }
        }
        let methods: Vec<Combiner> = {
            let mut m: Vec<Combiner> = rows.iter().map(|r| r.method).collect();
            m.sort_by_key(|c| format!("{c:?}"));
            m.dedup();
            m
        };
        let expect_true = config.p == 12;
        assert_eq!(methods.contains(&Combiner::RulesTrue), expect_true);
        assert_eq!(rows.len(), methods.len() * 2 * config.sweep_scales.len());
        let c = curve(&rows, Combiner::And, Scope::Cross);
        assert!(c.windows(2).all(|w| w[0].0 <= w[1].0));
        assert_eq!(run_edge_count_comparison(&config).unwrap(), rows);
    }
}

#[test]
fn curve_interpolation() {
    let c = vec![(0.0, 0.0), (2.0, 1.0), (4.0, 3.0)];
    assert_eq!(interpolate(&c, 1.0), Some(0.5));
    assert_eq!(interpolate(&c, 3.0), Some(2.0));
    assert_eq!(interpolate(&c, 4.0), Some(3.0));
    assert_eq!(interpolate(&c, 5.0), None);
}

#[test]
fn recovery_records_are_ratios() {
    let config = ExperimentConfig {
        p: 8,
        n_grid: vec![40, 400],
        c_grid: vec![1.0],
        replicates: 3,
        burn_in: 100,
        thin: 5,
        ..ExperimentConfig::recovery_curve()
    };
    let rows = run_recovery_curve(&config).unwrap();
    assert_eq!(rows.len(), 2 * Subgraph::ALL.len());
    for r in &rows {
        assert_eq!(r.replicates, 3);
        assert_eq!(r.success_rate, r.successes as f64 / 3.0);
        assert!((r.scaled_n - r.n as f64 / (3.0 * (8f64).ln())).abs() < 1e-12);
    }
    assert_eq!(run_recovery_curve(&config).unwrap(), rows);
}

#[test]
fn strong_signals_recover_the_graph() {
    // The lambda grid bottoms out at a fixed fraction of lambda_max, so BIC
    // keeps small spurious coefficients until n is large.
    let model = generate_model(&SimGraphConfig::gaussian_bernoulli(4, 0.6, 0.6, 0)).unwrap();
    let data = run_chain(
        &model,
        &GibbsConfig {
            burn_in: 200,
            thin: 10,
            n_samples: 20_000,
            seed: 9,
            ..GibbsConfig::default()
        },
    )
    .unwrap();
    let (est, _) = bic_edge_estimate(&data, &FitConfig::default()).unwrap();
    assert_eq!(precision_recall(&est, &model.edges.support()), (1.0, 1.0));
}

#[test]
fn precision_recall_conventions() {
    let truth = EdgeSet::from_pairs(4, [(0, 1), (1, 2)]);
    assert_eq!(precision_recall(&EdgeSet::new(4), &truth), (0.0, 0.0));
    let est = EdgeSet::from_pairs(4, [(0, 1), (2, 3)]);
    assert_eq!(precision_recall(&est, &truth), (0.5, 0.5));
}

/// max over non-neighbours of the l1 norm of Q_{l,N} Q_{N,N}^{-1}, with Q
/// assembled directly and each row solved by LU on the transposed block.
fn irrepresentability_oracle(model: &ModelSpec, data: &Dataset, s: usize) -> f64 {
    let p = model.p();
    let d = p - 1;
    let mut q = DMatrix::zeros(d + 1, d + 1);
    for i in 0..data.n() {
        let mut z = DVector::from_element(d + 1, 1.0);
        let mut eta = model.params[s].alpha1;
        for k in 0..d {
            let t = regressor_node(s, k);
            z[k] = data.get(i, t);
            eta += model.edges.get(s, t) * z[k];
        }
        let weight = match model.types[s] {
            NodeType::Gaussian => -1.0 / model.params[s].alpha2,
            NodeType::Bernoulli => 1.0 - eta.tanh().powi(2),
            NodeType::Poisson => eta.exp(),
            NodeType::Exponential => 1.0 / (eta * eta),
        };
        q += &z * z.transpose() * (weight / data.n() as f64);
    }
    let on: Vec<usize> = (0..=d).filter(|&k| k == d || model.edges.get(s, regressor_node(s, k)) != 0.0).collect();
    let off: Vec<usize> = (0..d).filter(|k| !on.contains(k)).collect();
    let block = DMatrix::from_fn(on.len(), on.len(), |i, j| q[(on[i], on[j])]);
    let lu = block.transpose().lu();
    off.iter()
        .map(|&l| {
            let row = DVector::from_fn(on.len(), |j, _| q[(l, on[j])]);
            lu.solve(&row).unwrap().iter().map(|v| v.abs()).sum::<f64>()
        })
        .fold(0.0, f64::max)
}

#[test]
fn irrepresentability_matches_dense_solve() {
    for seed in 0..5 {
        let model = generate_model(&SimGraphConfig::gaussian_bernoulli(8, 0.3, 0.6, seed)).unwrap();
        let data = run_chain(
            &model,
            &GibbsConfig {
                burn_in: 50,
                thin: 2,
                n_samples: 60,
                seed,
                ..GibbsConfig::default()
            },
        )
        .unwrap();
        for s in 0..8 {
            let got = irrepresentability_diagnostic(&model, &data, s).unwrap();
            let want = irrepresentability_oracle(&model, &data, s);
            assert!((got - want).abs() < 1e-9 * want.max(1.0), "seed {seed} node {s}: {got} vs {want}");
        }
    }
}

#[test]
fn irrepresentability_is_zero_for_orthogonal_design() {
    // Node 0 depends on node 1 only; node 2 is orthogonal to node 1 and the
    // intercept in this balanced design.
    let mut e = EdgeMatrix::zeros(3);
    e.set(0, 1, 0.4);
    let model = ModelSpec::new(
        vec![NodeType::Gaussian, NodeType::Bernoulli, NodeType::Bernoulli],
        vec![NodeParams::new(0.0, -1.0), NodeParams::new(0.0, 0.0), NodeParams::new(0.0, 0.0)],
        e,
    )
    .unwrap();
    let rows = vec![
        vec![0.3, 1.0, 1.0],
        vec![-0.2, 1.0, -1.0],
        vec![0.5, -1.0, 1.0],
        vec![-0.7, -1.0, -1.0],
    ];
    let data = Dataset::from_rows(&rows, model.types.clone()).unwrap();
    assert_eq!(irrepresentability_diagnostic(&model, &data, 0).unwrap(), 0.0);
    assert!(irrepresentability_diagnostic(&model, &data, 5).is_err());
}

#[test]
fn singular_neighbour_block_is_reported() {
    let mut e = EdgeMatrix::zeros(3);
    e.set(0, 1, 0.4);
    e.set(0, 2, 0.2);
    let model = ModelSpec::new(
        vec![NodeType::Gaussian, NodeType::Bernoulli, NodeType::Gaussian],
        vec![NodeParams::new(0.0, -1.0), NodeParams::new(0.0, 0.0), NodeParams::new(0.0, -1.0)],
        e,
    )
    .unwrap();
    // Node 1 is constant, so its column duplicates the intercept.
    let rows = vec![vec![0.3, 1.0, 1.0], vec![-0.2, 1.0, -1.0], vec![0.5, 1.0, 2.0]];
    let data = Dataset::from_rows(&rows, model.types.clone()).unwrap();
    let mut e2 = EdgeMatrix::zeros(3);
    e2.set(0, 1, 0.4);
    let sparse = ModelSpec::new(model.types.clone(), model.params.clone(), e2).unwrap();
    assert!(irrepresentability_diagnostic(&sparse, &data, 0).is_err());
}
