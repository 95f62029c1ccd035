//! Command-line interface. [`run`] parses arguments and returns the process
//! exit code so the binary stays a thin wrapper.
//!
//! Exit codes: 0 on success. `check` returns 0 (strongly compatible),
//! 1 (compatible only), 2 (incompatible) or 3 (unreadable model). Other
//! commands return 1 on failure; `fit` still writes its outputs when only
//! some nodes fail. Usage errors return clap's code 2.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use log::{error, info};
use serde_json::Value;

use crate::combine::{combine_and, combine_or, combine_with_selection_rules, estimate_bounds, EdgeSet, Fallback};
use crate::compat::{check_compatibility, Verdict};
use crate::error::{Error, Result};
use crate::family::NodeType;
use crate::fit::{
    bic, fit_node, fit_path, neighborhoods, select_lambda_by_type, type_grids, FitConfig,
    NeighborhoodFit, NodePath, PathFit,
};
use crate::gibbs::{run_chain, CompatPolicy, GibbsConfig};
use crate::harness::{
    run_bic_point, run_edge_count_comparison, run_recovery_curve, write_csv, ExperimentConfig,
    ExperimentKind,
};
use crate::io::{read_dataset_file, read_model, write_dataset, write_edges, write_model, FitReport};
use crate::simgen::{generate_model, Alpha1Block, SimGraphConfig};

#[derive(Debug, Parser)]
#[command(name = "mgm", version, about = "Mixed graphical models: generate, check, sample, fit")]
pub struct Cli {
    /// Worker threads for parallel fitting and replicates (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a strongly compatible chain-cross benchmark model (JSON).
    Gen(GenArgs),
    /// Check compatibility of a model file.
    Check(CheckArgs),
    /// Draw a dataset from a model with the Gibbs sampler (CSV).
    Sample(SampleArgs),
    /// Fit neighbourhoods and combine them into an edge list.
    Fit(FitArgs),
    /// Run a simulation study from a JSON config.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Number of nodes (even, at least 4).
    #[arg(long)]
    pub p: usize,
    /// Two type tags: first-half type then second-half type, e.g. `gb`.
    #[arg(long, default_value = "gb")]
    pub types: String,
    #[arg(long, default_value_t = 0.3)]
    pub a: f64,
    #[arg(long, default_value_t = 0.3)]
    pub b: f64,
    /// alpha1 of the first block: one value, or `v1,v2` for its two halves.
    #[arg(long, default_value = "0")]
    pub alpha1_first: String,
    /// alpha1 of the second block, same format.
    #[arg(long, default_value = "0")]
    pub alpha1_second: String,
    #[arg(long, env = "MGM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    pub model: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 3000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 500)]
    pub thin: usize,
    #[arg(long, env = "MGM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Sample even when the model is not strongly compatible.
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CombineRule {
    And,
    Or,
    Rules,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    pub data: PathBuf,
    /// One lambda for every node.
    #[arg(long, conflicts_with = "bic", required_unless_present = "bic")]
    pub lambda: Option<f64>,
    /// Select lambda per node type by summed BIC.
    #[arg(long)]
    pub bic: bool,
    /// Scale each penalty by its regressor's standard deviation.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub weighted: bool,
    #[arg(long, value_enum, default_value_t = CombineRule::Rules)]
    pub combine: CombineRule,
    /// Rule for same-type and undecided pairs under `--combine rules`.
    #[arg(long, default_value = "or")]
    pub fallback: Fallback,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Edge list output; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON fit report; defaults to the edge list path with `.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// JSON config; unspecified fields take the experiment's defaults.
    pub config: PathBuf,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub c_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long, env = "MGM_SEED")]
    pub seed: Option<u64>,
    /// Result CSV; overrides `output_path`. Stdout when neither is set.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and executes the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be at least 1");
            return 1;
        }
        pool = pool.num_threads(j);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    pool.install(|| dispatch(cli.command))
}

fn dispatch(command: Command) -> i32 {
    let result = match command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Check(a) => return cmd_check(&a),
        Command::Sample(a) => cmd_sample(&a),
        Command::Fit(a) => cmd_fit(&a),
        Command::Experiment(a) => cmd_experiment(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn parse_alpha1(text: &str) -> Result<Alpha1Block> {
    let values = text
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad alpha1 value '{v}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    match values[..] {
        [v] => Ok(Alpha1Block::Constant(v)),
        [a, b] => Ok(Alpha1Block::Split(a, b)),
        _ => Err(Error::Parse(format!("alpha1 takes one or two values, got '{text}'"))),
    }
}

fn parse_type_pair(text: &str) -> Result<(NodeType, NodeType)> {
    let tags: Vec<char> = text.trim().chars().collect();
    match tags[..] {
        [x, y] => match (NodeType::from_tag(x), NodeType::from_tag(y)) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::Parse(format!("unknown type tags '{text}'"))),
        },
        _ => Err(Error::Parse(format!("--types needs two tags such as 'gb', got '{text}'"))),
    }
}

fn emit(out: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(path) => {
            let mut f = io::BufWriter::new(fs::File::create(path)?);
            write(&mut f)?;
            f.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
        }
    }
    Ok(())
}

fn cmd_gen(a: &GenArgs) -> Result<i32> {
    let config = SimGraphConfig {
        p: a.p,
        type_pair: parse_type_pair(&a.types)?,
        a: a.a,
        b: a.b,
        alpha1_first: parse_alpha1(&a.alpha1_first)?,
        alpha1_second: parse_alpha1(&a.alpha1_second)?,
        seed: a.seed,
    };
    let model = generate_model(&config)?;
    match &a.out {
        Some(path) => write_model(path, &model)?,
        None => println!("{}", crate::io::model_to_json(&model)?),
    }
    info!("generated {} nodes, {} edges", model.p(), model.edges.support().len());
    Ok(0)
}

fn cmd_check(a: &CheckArgs) -> i32 {
    let model = match read_model(&a.model) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return 3;
        }
    };
    let report = check_compatibility(&model);
    println!("{}", report.verdict);
    for v in &report.violations {
        println!("  {}", v.message);
    }
    match report.verdict {
        Verdict::StronglyCompatible => 0,
        Verdict::CompatibleOnly => 1,
        Verdict::Incompatible => 2,
    }
}

fn cmd_sample(a: &SampleArgs) -> Result<i32> {
    let model = read_model(&a.model)?;
    let config = GibbsConfig {
        burn_in: a.burn_in,
        thin: a.thin,
        n_samples: a.n,
        seed: a.seed,
        compat: if a.force { CompatPolicy::Warn } else { CompatPolicy::Enforce },
        ..GibbsConfig::default()
    };
    let data = run_chain(&model, &config)?;
    emit(a.out.as_deref(), |w| write_dataset(w, &data))?;
    Ok(0)
}

/// Per-node BIC paths. Nodes whose path fails are left out and reported.
fn bic_fits(
    data: &crate::model::Dataset,
    config: &FitConfig,
) -> Result<(Vec<NeighborhoodFit>, BTreeMap<NodeType, f64>, BTreeMap<usize, String>)> {
    use rayon::prelude::*;
    let grids = type_grids(data, config)?;
    let types = data.types().to_vec();
    let results: Vec<(usize, Result<NodePath>)> = (0..data.p())
        .into_par_iter()
        .map(|s| {
            let lambdas = grids[&types[s]].clone();
            let path = fit_path(data, s, &lambdas, config).and_then(|fits| {
                let cond = config.conditional(types[s]);
                let bic = fits.iter().map(|f| bic(f, data, cond)).collect::<Result<Vec<_>>>()?;
                Ok(NodePath { s, lambdas, fits, bic })
            });
            (s, path)
        })
        .collect();
    let mut failures = BTreeMap::new();
    let mut nodes = Vec::new();
    for (s, r) in results {
        match r {
            Ok(path) => nodes.push(path),
            Err(e) => {
                failures.insert(s, e.to_string());
            }
        }
    }
    let path = PathFit { types: types.clone(), grids, nodes };
    let chosen = select_lambda_by_type(&path, &types);
    let lambdas = chosen.iter().map(|(k, c)| (*k, c.lambda)).collect();
    Ok((path.fits_at(&chosen), lambdas, failures))
}

fn cmd_fit(a: &FitArgs) -> Result<i32> {
    let data = read_dataset_file(&a.data)?;
    let config = FitConfig {
        weighted: a.weighted,
        tol: a.tol,
        ..FitConfig::default()
    };
    config.validate()?;
    let types = data.types().to_vec();

    let (fits, lambdas, failures) = match a.lambda {
        Some(lambda) => {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return Err(Error::InvalidConfig(format!("lambda must be non-negative, got {lambda}")));
            }
            use rayon::prelude::*;
            let results: Vec<(usize, Result<NeighborhoodFit>)> = (0..data.p())
                .into_par_iter()
                .map(|s| (s, fit_node(&data, s, lambda, &config, None)))
                .collect();
            let mut fits = Vec::new();
            let mut failures = BTreeMap::new();
            for (s, r) in results {
                match r {
                    Ok(f) => fits.push(f),
                    Err(e) => {
                        failures.insert(s, e.to_string());
                    }
                }
            }
            let mut kinds: Vec<NodeType> = types.clone();
            kinds.sort();
            kinds.dedup();
            (fits, kinds.into_iter().map(|k| (k, lambda)).collect(), failures)
        }
        None => bic_fits(&data, &config)?,
    };
    for (s, msg) in &failures {
        error!("node {s}: {msg}");
        eprintln!("node {s} failed: {msg}");
    }
    for f in fits.iter().filter(|f| !f.converged) {
        eprintln!("warning: node {} did not converge in {} iterations", f.s, f.iterations);
    }

    let nb = neighborhoods(&fits, data.p());
    let bounds = estimate_bounds(&fits, &types);
    let edges: EdgeSet = match a.combine {
        CombineRule::And => combine_and(&nb),
        CombineRule::Or => combine_or(&nb),
        CombineRule::Rules => combine_with_selection_rules(&nb, &types, &bounds, a.fallback),
    };
    emit(a.out.as_deref(), |w| write_edges(w, &edges))?;

    let combine = match a.combine {
        CombineRule::And => "and".to_string(),
        CombineRule::Or => "or".to_string(),
        CombineRule::Rules => format!("rules/{}", a.fallback),
    };
    let report = FitReport::new(combine, lambdas, &fits, &types, &bounds, edges.len(), failures.clone());
    let report_path = a
        .report
        .clone()
        .or_else(|| a.out.as_ref().map(|p| p.with_extension("json")));
    if let Some(path) = report_path {
        fs::write(path, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    Ok(if failures.is_empty() { 0 } else { 1 })
}

/// Overlays the keys of `config` on the defaults of its experiment kind.
pub fn load_experiment_config(text: &str) -> Result<ExperimentConfig> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("experiment config: {e}")))?;
    let Value::Object(fields) = value else {
        return Err(Error::Parse("experiment config must be a JSON object".into()));
    };
    let kind: ExperimentKind = match fields.get("experiment") {
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| Error::Parse(format!("experiment: {e}")))?,
        None => return Err(Error::Parse("experiment config needs an 'experiment' field".into())),
    };
    let mut merged = serde_json::to_value(ExperimentConfig::for_kind(kind))?;
    if let Value::Object(base) = &mut merged {
        for (k, v) in fields {
            if !base.contains_key(&k) {
                return Err(Error::Parse(format!("unknown experiment config field '{k}'")));
            }
            base.insert(k, v);
        }
    }
    serde_json::from_value(merged).map_err(|e| Error::Parse(format!("experiment config: {e}")))
}

fn cmd_experiment(a: &ExperimentArgs) -> Result<i32> {
    let mut config = load_experiment_config(&fs::read_to_string(&a.config)?)?;
    if let Some(p) = a.p {
        config.p = p;
    }
    if let Some(n) = a.n {
        config.n = n;
    }
    if let Some(g) = &a.n_grid {
        config.n_grid = g.clone();
    }
    if let Some(c) = &a.c_grid {
        config.c_grid = c.clone();
    }
    if let Some(r) = a.replicates {
        config.replicates = r;
    }
    if let Some(b) = a.burn_in {
        config.burn_in = b;
    }
    if let Some(t) = a.thin {
        config.thin = t;
    }
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(o) = &a.out {
        config.output_path = Some(o.clone());
    }
    config.validate()?;

    let out = config.output_path.clone();
    let summary = match config.experiment {
        ExperimentKind::RecoveryCurve => {
            let rows = run_recovery_curve(&config)?;
            write_rows(out.as_deref(), &rows)?;
            format!("recovery curve: {} records", rows.len())
        }
        ExperimentKind::GaussianBernoulliComparison | ExperimentKind::PoissonBernoulliRules => {
            let rows = run_edge_count_comparison(&config)?;
            write_rows(out.as_deref(), &rows)?;
            format!("edge-count comparison: {} rows", rows.len())
        }
        ExperimentKind::BicPoint => {
            let point = run_bic_point(&config)?;
            write_rows(out.as_deref(), &point.replicates)?;
            format!("BIC point: precision {:.3}, recall {:.3}", point.precision, point.recall)
        }
    };
    if out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(0)
}

fn write_rows<T: serde::Serialize>(out: Option<&Path>, rows: &[T]) -> Result<()> {
    match out {
        Some(path) => write_csv(path, rows),
        None => {
            let mut w = csv::Writer::from_writer(io::stdout());
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
            Ok(())
        }
    }
}
