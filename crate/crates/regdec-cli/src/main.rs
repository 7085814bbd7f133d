//! Command-line front end: generate block-model data, fit graphs and
//! matrices, and run the experiment harness.
//!
//! Exit codes: 0 success (or experiment PASS), 1 usage/configuration
//! error, 2 data error, 3 experiment FAIL. Every output JSON embeds the
//! resolved run configuration and seed; re-running that configuration
//! reproduces the output byte-for-byte apart from the `generated_at`
//! field.

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;
use regdec::blockmodels::{
    poisson_blowup, sample_graph, sample_poisson, sample_regularity_counterexample,
    BlockModelSpec, PoissonBlockSpec, WeightMatrix,
};
use regdec::harness::{self, DominanceFamily, ExperimentReport};
use regdec::optimizer::{self, SearchStrategy};
use regdec::{codelength, io as rio, nats_to_bits, Error};
use serde::Serialize;
use serde_json::json;
use std::process::ExitCode;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_EXPERIMENT_FAIL: u8 = 3;

#[derive(Parser)]
#[command(name = "regdec", version, about = "Regular decomposition of graphs and matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample block-model data with its ground-truth partition(s)
    Generate(GenerateArgs),
    /// Fit a block structure to a graph by two-part code length
    FitGraph(FitGraphArgs),
    /// Fit a bi-clustering to a non-negative matrix
    FitMatrix(FitMatrixArgs),
    /// Run a named verification experiment
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Units {
    Nats,
    Bits,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    /// Binary stochastic block model graph
    Sbm,
    /// Symmetric Poissonian block-model count matrix
    Poisson,
    /// Rectangular Poisson blow-up of a mean matrix
    Blowup,
    /// The structure-versus-regularity bipartite counterexample
    Counterexample,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Variant {
    /// Two-part objective breakdown (likelihood + model cost)
    TwoPart,
    /// Five-part block-model code breakdown
    FivePart,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Strategy {
    DiagonalThenLocal,
    FullGrid,
    Alternating,
}

impl From<Strategy> for SearchStrategy {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::DiagonalThenLocal => SearchStrategy::DiagonalThenLocal,
            Strategy::FullGrid => SearchStrategy::FullGrid,
            Strategy::Alternating => SearchStrategy::Alternating,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Model family to sample from
    #[arg(long, value_enum)]
    model: Model,
    /// Block proportions, comma-separated (sbm/poisson)
    #[arg(long)]
    gammas: Option<String>,
    /// Density matrix rows, ';'-separated rows of ','-separated values (sbm)
    #[arg(long)]
    densities: Option<String>,
    /// Rate matrix in the same row syntax (poisson/blowup)
    #[arg(long)]
    rates: Option<String>,
    /// Number of nodes (sbm/poisson/counterexample)
    #[arg(long)]
    n: Option<usize>,
    /// Blow-up factor per block (blowup)
    #[arg(long)]
    blowup: Option<usize>,
    /// Block-size exponent (counterexample)
    #[arg(long)]
    alpha: Option<f64>,
    /// Wiring probability (counterexample)
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path prefix
    #[arg(long)]
    output: String,
}

#[derive(Args)]
struct FitGraphArgs {
    /// Edge-list file ("u v" per line, 0-based)
    #[arg(long)]
    input: String,
    /// Number of nodes in the graph
    #[arg(long)]
    n: usize,
    /// Fixed block count
    #[arg(long, conflicts_with = "k_range")]
    k: Option<usize>,
    /// Block-count range "lo..hi" (inclusive) for model-order selection
    #[arg(long)]
    k_range: Option<String>,
    /// Stop at the first local minimum of the k scan
    #[arg(long)]
    first_local_min: bool,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = optimizer::DEFAULT_MAX_ITERS)]
    max_iters: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Units for the human-readable summary (JSON always carries both)
    #[arg(long, value_enum, default_value_t = Units::Bits)]
    units: Units,
    /// Which code-length breakdown to embed in the report
    #[arg(long, value_enum, default_value_t = Variant::TwoPart)]
    variant: Variant,
    /// Worker count for restart parallelism (reduction is deterministic)
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output path prefix
    #[arg(long)]
    output: String,
}

#[derive(Args)]
struct FitMatrixArgs {
    /// Headerless CSV of non-negative reals
    #[arg(long)]
    input: String,
    /// Fixed row block count (with --k2: skip the order search)
    #[arg(long, requires = "k2")]
    k1: Option<usize>,
    /// Fixed column block count
    #[arg(long, requires = "k1")]
    k2: Option<usize>,
    /// Order-search bounds "k1_max..k2_max"
    #[arg(long, conflicts_with_all = ["k1", "k2"])]
    k_range: Option<String>,
    #[arg(long, value_enum, default_value_t = Strategy::DiagonalThenLocal)]
    strategy: Strategy,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = optimizer::DEFAULT_MAX_ITERS)]
    max_iters: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Units::Bits)]
    units: Units,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output path prefix
    #[arg(long)]
    output: String,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment name (see --experiment help for the registered set)
    #[arg(long)]
    experiment: String,
    /// Problem size override where applicable
    #[arg(long)]
    n: Option<usize>,
    /// Trial count override where applicable
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Report JSON path
    #[arg(long)]
    output: Option<String>,
    /// Optional per-trial CSV path
    #[arg(long)]
    csv: Option<String>,
}

/// The resolved configuration, embedded verbatim in every output report.
#[derive(Serialize)]
struct RunConfig {
    command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_range: Option<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k1: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k2: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    restarts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_iters: Option<usize>,
    seed: u64,
    units: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    variant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    strategy: Option<String>,
    workers: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    experiment: Option<String>,
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var("REGDEC_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(0)
}

fn timestamp() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn parse_vector(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| CliError::usage(format!("bad {what} entry {:?}", t.trim())))
        })
        .collect()
}

fn parse_matrix(text: &str, what: &str) -> Result<Array2<f64>, CliError> {
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .map(|row| parse_vector(row, what))
        .collect::<Result<_, _>>()?;
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::usage(format!("ragged {what} matrix")));
    }
    let nrows = rows.len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(Array2::from_shape_vec((nrows, ncols), flat).expect("shape checked"))
}

fn parse_range(text: &str) -> Result<(usize, usize), CliError> {
    let (lo, hi) = text
        .split_once("..")
        .ok_or_else(|| CliError::usage(format!("range {text:?} is not of the form lo..hi")))?;
    let lo = lo
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("bad range start {lo:?}")))?;
    let hi = hi
        .trim()
        .trim_start_matches('=')
        .parse()
        .map_err(|_| CliError::usage(format!("bad range end {hi:?}")))?;
    Ok((lo, hi))
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Data { .. } | Error::Io(_) => EXIT_DATA,
            Error::Domain(_) | Error::Partition(_) | Error::Spec(_) => EXIT_USAGE,
            Error::Search(_) => EXIT_DATA,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's help/version "errors" are successful output
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(EXIT_USAGE);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let outcome = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::FitGraph(args) => cmd_fit_graph(args),
        Command::FitMatrix(args) => cmd_fit_matrix(args),
        Command::Experiment(args) => cmd_experiment(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<u8, CliError> {
    let seed = resolve_seed(args.seed);
    let prefix = &args.output;
    match args.model {
        Model::Sbm => {
            let gammas = parse_vector(
                args.gammas
                    .as_deref()
                    .ok_or_else(|| CliError::usage("--gammas is required for sbm"))?,
                "gammas",
            )?;
            let densities = parse_matrix(
                args.densities
                    .as_deref()
                    .ok_or_else(|| CliError::usage("--densities is required for sbm"))?,
                "densities",
            )?;
            let n = args.n.ok_or_else(|| CliError::usage("--n is required for sbm"))?;
            let spec = BlockModelSpec::new(gammas, densities)?;
            let (g, truth) = sample_graph(&spec, n, seed)?;
            rio::write_edge_list(format!("{prefix}.edges"), &g)?;
            rio::write_partition(format!("{prefix}.partition"), &truth)?;
            println!("wrote {prefix}.edges ({} edges) and {prefix}.partition", g.edge_count());
        }
        Model::Poisson => {
            let gammas = parse_vector(
                args.gammas
                    .as_deref()
                    .ok_or_else(|| CliError::usage("--gammas is required for poisson"))?,
                "gammas",
            )?;
            let rates = parse_matrix(
                args.rates
                    .as_deref()
                    .ok_or_else(|| CliError::usage("--rates is required for poisson"))?,
                "rates",
            )?;
            let n = args.n.ok_or_else(|| CliError::usage("--n is required for poisson"))?;
            let spec = PoissonBlockSpec::new(gammas, rates)?;
            let (m, truth) = sample_poisson(&spec, n, seed)?;
            let w = WeightMatrix::from_array(m.entries_f64())?;
            rio::write_csv_matrix(format!("{prefix}.csv"), &w)?;
            rio::write_partition(format!("{prefix}.partition"), &truth)?;
            println!("wrote {prefix}.csv and {prefix}.partition");
        }
        Model::Blowup => {
            let rates = parse_matrix(
                args.rates
                    .as_deref()
                    .ok_or_else(|| CliError::usage("--rates is required for blowup"))?,
                "rates",
            )?;
            let factor = args
                .blowup
                .ok_or_else(|| CliError::usage("--blowup is required for blowup"))?;
            let sample = poisson_blowup(&WeightMatrix::from_array(rates)?, factor, seed)?;
            rio::write_csv_matrix(format!("{prefix}.csv"), &sample.matrix)?;
            rio::write_partition(format!("{prefix}.rows.partition"), &sample.row_partition)?;
            rio::write_partition(format!("{prefix}.cols.partition"), &sample.col_partition)?;
            println!("wrote {prefix}.csv with its row/column partitions");
        }
        Model::Counterexample => {
            let n = args
                .n
                .ok_or_else(|| CliError::usage("--n is required for counterexample"))?;
            let alpha = args
                .alpha
                .ok_or_else(|| CliError::usage("--alpha is required for counterexample"))?;
            let p = args
                .p
                .ok_or_else(|| CliError::usage("--p is required for counterexample"))?;
            let (g, fine) = sample_regularity_counterexample(n, alpha, p, seed)?;
            rio::write_edge_list(format!("{prefix}.edges"), &g)?;
            rio::write_partition(format!("{prefix}.partition"), &fine)?;
            println!(
                "wrote {prefix}.edges ({} nodes, {} edges) and {prefix}.partition",
                g.n(),
                g.edge_count()
            );
        }
    }
    Ok(0)
}

fn units_name(u: Units) -> &'static str {
    match u {
        Units::Nats => "nats",
        Units::Bits => "bits",
    }
}

fn in_units(nats: f64, u: Units) -> f64 {
    match u {
        Units::Nats => nats,
        Units::Bits => nats_to_bits(nats),
    }
}

fn cmd_fit_graph(args: FitGraphArgs) -> Result<u8, CliError> {
    let seed = resolve_seed(args.seed);
    if args.workers < 1 {
        return Err(CliError::usage("--workers must be at least 1"));
    }
    let g = rio::read_edge_list(&args.input, args.n)?;
    let k_range = args.k_range.as_deref().map(parse_range).transpose()?;
    let fit = match (args.k, k_range) {
        (Some(k), None) => optimizer::argmax_k(&g, k, args.restarts, seed, args.max_iters)?,
        (None, Some((lo, hi))) => optimizer::greedy_two_part_mdl(
            &g,
            lo,
            hi,
            args.restarts,
            seed,
            args.max_iters,
            args.first_local_min,
        )?,
        (None, None) => {
            return Err(CliError::usage("one of --k or --k-range is required"));
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };

    let breakdown = match args.variant {
        Variant::TwoPart => json!({
            "likelihood_nats": fit.two_part.likelihood,
            "model_nats": fit.two_part.model,
            "total_nats": fit.two_part.total(),
            "formula_variant": "two-part",
        }),
        Variant::FivePart => codelength::graph_block_code(&g, &fit.partition)?.to_json(false),
    };
    let config = RunConfig {
        command: "fit-graph".into(),
        input: Some(args.input.clone()),
        output: Some(args.output.clone()),
        k: args.k,
        k_range,
        k1: None,
        k2: None,
        restarts: Some(args.restarts),
        max_iters: Some(args.max_iters),
        seed,
        units: units_name(args.units).into(),
        variant: Some(
            match args.variant {
                Variant::TwoPart => "two-part",
                Variant::FivePart => "five-part",
            }
            .into(),
        ),
        strategy: None,
        workers: args.workers,
        experiment: None,
    };
    let partition_path = format!("{}.partition", args.output);
    rio::write_partition(&partition_path, &fit.partition)?;
    let report = json!({
        "config": config,
        "k": fit.k,
        "assignment": partition_path,
        "objective_nats": fit.two_part.total(),
        "objective_bits": nats_to_bits(fit.two_part.total()),
        "selection_score_nats": fit.two_part.selection_score(),
        "search_score_nats": fit.score,
        "code_length": breakdown,
        "restarts": fit.restarts,
        "failed_restarts": fit.failed_restarts,
        "restart_index": fit.restart_index,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "seed": fit.seed,
        "generated_at": timestamp(),
    });
    std::fs::write(
        format!("{}.json", args.output),
        serde_json::to_string_pretty(&report).expect("serializable") + "\n",
    )
    .map_err(Error::from)?;
    println!(
        "k = {}, code length = {:.3} {}",
        fit.k,
        in_units(fit.two_part.total(), args.units),
        units_name(args.units)
    );
    Ok(0)
}

fn cmd_fit_matrix(args: FitMatrixArgs) -> Result<u8, CliError> {
    let seed = resolve_seed(args.seed);
    if args.workers < 1 {
        return Err(CliError::usage("--workers must be at least 1"));
    }
    let m = rio::read_csv_matrix(&args.input)?;
    let strategy_name = match args.strategy {
        Strategy::DiagonalThenLocal => "diagonal-then-local",
        Strategy::FullGrid => "full-grid",
        Strategy::Alternating => "alternating",
    };
    let k_range = args.k_range.as_deref().map(parse_range).transpose()?;
    let fit = match (args.k1, args.k2) {
        (Some(k1), Some(k2)) => {
            optimizer::argmax_k1k2(&m, k1, k2, args.restarts, seed, args.max_iters)?
        }
        _ => {
            let (k1_max, k2_max) = k_range.unwrap_or((4, 4));
            optimizer::matrix_mdl_search(
                &m,
                k1_max,
                k2_max,
                args.strategy.into(),
                args.restarts,
                seed,
                args.max_iters,
            )?
        }
    };
    let config = RunConfig {
        command: "fit-matrix".into(),
        input: Some(args.input.clone()),
        output: Some(args.output.clone()),
        k: None,
        k_range,
        k1: args.k1,
        k2: args.k2,
        restarts: Some(args.restarts),
        max_iters: Some(args.max_iters),
        seed,
        units: units_name(args.units).into(),
        variant: Some("matrix-two-part".into()),
        strategy: Some(strategy_name.into()),
        workers: args.workers,
        experiment: None,
    };
    let rows_path = format!("{}.rows.partition", args.output);
    let cols_path = format!("{}.cols.partition", args.output);
    rio::write_partition(&rows_path, &fit.rows)?;
    rio::write_partition(&cols_path, &fit.cols)?;
    let report = json!({
        "config": config,
        "k1": fit.k1,
        "k2": fit.k2,
        "row_assignment": rows_path,
        "col_assignment": cols_path,
        "objective_nats": fit.objective,
        "objective_bits": nats_to_bits(fit.objective),
        "search_score_nats": fit.score,
        "visited": fit.visited,
        "restarts": fit.restarts,
        "failed_restarts": fit.failed_restarts,
        "restart_index": fit.restart_index,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "seed": fit.seed,
        "generated_at": timestamp(),
    });
    std::fs::write(
        format!("{}.json", args.output),
        serde_json::to_string_pretty(&report).expect("serializable") + "\n",
    )
    .map_err(Error::from)?;
    println!(
        "(k1, k2) = ({}, {}), code length = {:.3} {}",
        fit.k1,
        fit.k2,
        in_units(fit.objective, args.units),
        units_name(args.units)
    );
    Ok(0)
}

const EXPERIMENTS: &[&str] = &[
    "consistency",
    "refinement-gain",
    "dominance-binomial",
    "dominance-poisson",
    "regularity",
    "counterexample",
];

fn cmd_experiment(args: ExperimentArgs) -> Result<u8, CliError> {
    let seed = resolve_seed(args.seed);
    if args.workers < 1 {
        return Err(CliError::usage("--workers must be at least 1"));
    }
    let fixture = || {
        BlockModelSpec::new(
            vec![0.5, 0.5],
            ndarray::array![[0.8, 0.05], [0.05, 0.8]],
        )
        .expect("valid fixture")
    };
    let report: ExperimentReport = match args.experiment.as_str() {
        "consistency" => harness::consistency_experiment(
            &fixture(),
            &[args.n.unwrap_or(120)],
            args.trials.unwrap_or(20),
            10,
            0.95,
            seed,
        )?,
        "refinement-gain" => harness::refinement_gain_experiment(
            &fixture(),
            args.n.unwrap_or(100),
            4,
            args.trials.unwrap_or(200),
            seed,
        )?,
        "dominance-binomial" => harness::dominance_check_appendix(
            &[30, 30],
            0.3,
            args.trials.unwrap_or(100_000),
            seed,
            DominanceFamily::Binomial,
        )?,
        "dominance-poisson" => harness::dominance_check_appendix(
            &[10, 10],
            0.5,
            args.trials.unwrap_or(100_000),
            seed,
            DominanceFamily::Poisson,
        )?,
        "regularity" => {
            let n = args.n.unwrap_or(200);
            let (g, truth) = sample_graph(&fixture(), n, seed)?;
            harness::regularity_sampler(&g, &truth, 0.15, args.trials.unwrap_or(100), seed)?
        }
        "counterexample" => harness::counterexample_experiment(
            args.n.unwrap_or(256),
            0.25,
            0.5,
            0.1,
            seed,
        )?,
        other => {
            return Err(CliError::usage(format!(
                "unknown experiment {other:?}; registered: {}",
                EXPERIMENTS.join(", ")
            )));
        }
    };
    let config = RunConfig {
        command: "experiment".into(),
        input: None,
        output: args.output.clone(),
        k: None,
        k_range: None,
        k1: None,
        k2: None,
        restarts: None,
        max_iters: None,
        seed,
        units: "nats".into(),
        variant: None,
        strategy: None,
        workers: args.workers,
        experiment: Some(args.experiment.clone()),
    };
    if let Some(path) = &args.output {
        let wrapped = json!({
            "config": config,
            "report": report,
            "generated_at": timestamp(),
        });
        std::fs::write(
            path,
            serde_json::to_string_pretty(&wrapped).expect("serializable") + "\n",
        )
        .map_err(Error::from)?;
    }
    if let Some(path) = &args.csv {
        std::fs::write(path, report.to_csv()).map_err(Error::from)?;
    }
    println!(
        "experiment {} ({} trials): {}",
        report.name,
        report.records.len(),
        if report.pass { "PASS" } else { "FAIL" }
    );
    Ok(if report.pass { 0 } else { EXIT_EXPERIMENT_FAIL })
}
