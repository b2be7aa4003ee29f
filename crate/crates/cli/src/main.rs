// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dagsmooth::io::{
    format_benchmark_csv, format_pvalues, read_graph, read_pvalues, write_atomic, write_json, LabeledGraph,
    SelectionDocument,
};
use dagsmooth::rng::{derive_seed, stream};
use dagsmooth::simulation::{
    gen_graph, gen_pvalues, gen_truth, run_benchmark, AlternativeScheme, BenchmarkConfig, GraphRecipe, NullModel,
    Selector, DEFAULT_GAMMA, STANDARD_ALPHAS,
};
use dagsmooth::validation::{
    check_error_control, check_superuniformity, prds_diagnostic, reference_equivalence, ErrorTarget, DEFAULT_GRID,
};
use dagsmooth::{Error, Method, PValues, SmoothingSpec, VERSION};
use serde::Serialize;

const EXIT_VALIDATION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "dagsmooth", version, about = "Smoothed p-values and structured multiple testing on DAGs")]
struct Cli {
    /// Leave the timestamp out of JSON outputs
    #[arg(long, global = true)]
    deterministic: bool,

    /// Worker threads (overrides DAGSMOOTH_THREADS)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Smooth a p-value file over a graph and write the smoothed CSV
    Smooth {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        smoothing: SmoothArgs,
        /// Output CSV (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smooth, run a selection procedure and write the result JSON
    Select {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        smoothing: SmoothArgs,
        #[arg(long)]
        method: Method,
        #[arg(long)]
        alpha: f64,
        /// FDP tolerance of the fdx method
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the synthetic benchmark grid and write one CSV row per cell
    Simulate {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a validation check, write its report and exit 1 if it fails
    Validate(Box<ValidateArgs>),
}

#[derive(Args, Debug)]
struct InputArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    pvalues: PathBuf,
}

#[derive(Args, Debug)]
struct SmoothArgs {
    /// none, fisher, stouffer, tippett, ruger:K, genmean:R, cons-stouffer[:children|:descendants]
    #[arg(long, default_value = "none")]
    smoothing: SmoothingSpec,
    /// Monte Carlo draws for genmean without an exact null
    #[arg(long)]
    mc_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl SmoothArgs {
    fn spec(&self) -> SmoothingSpec {
        with_mc(self.smoothing.clone(), self.mc_samples, self.seed)
    }
}

fn with_mc(spec: SmoothingSpec, samples: Option<usize>, seed: Option<u64>) -> SmoothingSpec {
    match spec {
        SmoothingSpec::GeneralizedMean { mc_samples, seed: s, .. } => {
            spec.with_monte_carlo(samples.unwrap_or(mc_samples), seed.unwrap_or(s))
        }
        other => other,
    }
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Graph recipes, e.g. deep_tree:8:2,bipartite,hourglass
    #[arg(long, value_delimiter = ',', default_value = "deep_tree")]
    recipe: Vec<GraphRecipe>,
    #[arg(long, value_delimiter = ',', default_value = "global_normal")]
    scheme: Vec<AlternativeScheme>,
    #[arg(long, value_delimiter = ',', default_value = "none,fisher")]
    smoothings: Vec<SmoothingSpec>,
    #[arg(long, value_delimiter = ',', default_value = "fwer-mg,fdx,fdr-dagger,bh")]
    methods: Vec<Method>,
    /// Defaults to the standard grid 0.01 .. 0.25
    #[arg(long, value_delimiter = ',')]
    alphas: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    gamma: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// independent or copula
    #[arg(long, default_value = "independent")]
    null_model: NullModel,
    /// Draw a new graph every trial
    #[arg(long)]
    resample_graph: bool,
}

impl GridArgs {
    fn config(&self) -> BenchmarkConfig {
        BenchmarkConfig {
            recipes: self.recipe.clone(),
            schemes: self.scheme.clone(),
            null_model: self.null_model,
            smoothings: self.smoothings.clone(),
            selectors: self.methods.iter().map(|&method| Selector { method, gamma: self.gamma }).collect(),
            alphas: if self.alphas.is_empty() { STANDARD_ALPHAS.to_vec() } else { self.alphas.clone() },
            trials: self.trials,
            seed: self.seed,
            resample_graph: self.resample_graph,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Check {
    Superuniform,
    ErrorControl,
    Prds,
    Reference,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long, value_enum)]
    check: Check,
    /// Report JSON (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Graph file for superuniform, prds and reference; overrides --graph-recipe
    #[arg(long)]
    graph: Option<PathBuf>,
    /// P-value file; with --graph, reference checks this one instance
    #[arg(long)]
    pvalues: Option<PathBuf>,
    #[arg(long, default_value = "deep_tree:3:2")]
    graph_recipe: GraphRecipe,
    #[arg(long, default_value = "fisher")]
    smoothing: SmoothingSpec,
    #[arg(long)]
    mc_samples: Option<usize>,
    /// Simulation draws (superuniform, prds)
    #[arg(long, default_value_t = 200_000)]
    draws: usize,
    /// fwer, fdx or fdr (error-control)
    #[arg(long, default_value = "fdr")]
    target: ErrorTarget,
    /// Node to condition on (prds)
    #[arg(long, default_value_t = 0)]
    null_node: usize,
    /// Random upper sets (prds)
    #[arg(long, default_value_t = 20)]
    probes: usize,
    /// Random instances (reference)
    #[arg(long, default_value_t = 100)]
    instances: usize,
    /// Level for the reference check
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Grid for error-control; --seed also seeds the other checks
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Serialize)]
struct Report<T: Serialize> {
    version: &'static str,
    check: &'static str,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp: Option<u64>,
    report: T,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::InvalidRecipe(_) | Error::Domain(_) | Error::SpecMismatch(_) => EXIT_USAGE,
            Error::NumericalInstability(_) | Error::ConstraintViolation(_) => EXIT_VALIDATION,
            _ => EXIT_INPUT,
        };
        Failure { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {}", e.message);
        return ExitCode::from(e.code);
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VALIDATION),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn configure_threads(flag: Option<usize>) -> Result<(), Failure> {
    let threads = match flag {
        Some(n) => Some(n),
        None => match std::env::var("DAGSMOOTH_THREADS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| Failure {
                code: EXIT_USAGE,
                message: format!("DAGSMOOTH_THREADS must be a positive integer, got `{v}`"),
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure { code: EXIT_USAGE, message: "thread count must be positive".into() });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure { code: EXIT_USAGE, message: e.to_string() })?;
    }
    Ok(())
}

fn timestamp(deterministic: bool) -> Option<u64> {
    if deterministic {
        return None;
    }
    SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs())
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => write_atomic(path, bytes)?,
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure { code: EXIT_INPUT, message: e.to_string() })?,
    }
    Ok(())
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), Failure> {
    match out {
        Some(path) => write_json(path, value)?,
        None => {
            let text = serde_json::to_string_pretty(value).map_err(|e| Failure { code: EXIT_INPUT, message: e.to_string() })?;
            emit(None, format!("{text}\n").as_bytes())?;
        }
    }
    Ok(())
}

fn load(input: &InputArgs) -> Result<(LabeledGraph, PValues), Failure> {
    let graph = read_graph(&input.graph)?;
    let p = read_pvalues(&input.pvalues, &graph)?;
    Ok((graph, p))
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    match &cli.command {
        Command::Smooth { input, smoothing, out } => {
            let (graph, p) = load(input)?;
            let smoothed = dagsmooth::smooth(&graph.dag, &p, &smoothing.spec())?;
            emit(out.as_deref(), format_pvalues(&graph, &smoothed)?.as_bytes())?;
            Ok(true)
        }
        Command::Select { input, smoothing, method, alpha, gamma, out } => {
            let (graph, p) = load(input)?;
            let spec = smoothing.spec();
            let smoothed = dagsmooth::smooth(&graph.dag, &p, &spec)?;
            let result = method.select(&graph.dag, &smoothed, *alpha, *gamma)?;
            let doc = SelectionDocument::new(&result, &graph, &spec.to_string(), timestamp(cli.deterministic));
            emit_json(out.as_deref(), &doc)?;
            Ok(true)
        }
        Command::Simulate { grid, out } => {
            let rows = run_benchmark(&grid.config())?;
            emit(out.as_deref(), format_benchmark_csv(&rows)?.as_bytes())?;
            Ok(true)
        }
        Command::Validate(args) => validate(args, timestamp(cli.deterministic)),
    }
}

fn finish<T: Serialize>(
    out: Option<&Path>,
    check: &'static str,
    pass: bool,
    timestamp: Option<u64>,
    report: &T,
) -> Result<bool, Failure> {
    emit_json(out, &Report { version: VERSION, check, pass, timestamp, report })?;
    if !pass {
        eprintln!("validation `{check}` failed");
    }
    Ok(pass)
}

fn validate(args: &ValidateArgs, timestamp: Option<u64>) -> Result<bool, Failure> {
    let seed = args.grid.seed;
    let graph = || -> Result<LabeledGraph, Failure> {
        Ok(match &args.graph {
            Some(path) => read_graph(path)?,
            None => LabeledGraph::with_index_labels(gen_graph(&args.graph_recipe, seed)?),
        })
    };
    let spec = with_mc(args.smoothing.clone(), args.mc_samples, None);
    let out = args.out.as_deref();
    match args.check {
        Check::Superuniform => {
            let g = graph()?;
            let r = check_superuniformity(&g.dag, &spec, args.grid.null_model, args.draws, seed, &DEFAULT_GRID)?;
            finish(out, "superuniform", r.pass, timestamp, &r)
        }
        Check::ErrorControl => {
            let r = check_error_control(&args.grid.config(), args.target)?;
            finish(out, "error-control", r.pass, timestamp, &r)
        }
        Check::Prds => {
            let g = graph()?;
            let r = prds_diagnostic(&g.dag, &spec, args.grid.null_model, args.draws, seed, args.null_node, args.probes)?;
            finish(out, "prds", r.violations == 0, timestamp, &r)
        }
        Check::Reference => {
            let gamma = args.grid.gamma;
            let mut reports = Vec::new();
            match (&args.graph, &args.pvalues) {
                (Some(_), Some(pfile)) => {
                    let g = graph()?;
                    let p = read_pvalues(pfile, &g)?;
                    reports.push(reference_equivalence(&g.dag, &p, args.alpha, gamma)?);
                }
                (_, None) => {
                    let scheme = args.grid.scheme.first().copied().unwrap_or_else(AlternativeScheme::global_normal);
                    for i in 0..args.instances as u64 {
                        let dag = match &args.graph {
                            Some(_) => graph()?.dag,
                            None => gen_graph(&args.graph_recipe, derive_seed(seed, &[i]))?,
                        };
                        let mut rng = stream(seed, &[i, 1]);
                        let truth = gen_truth(&dag, &scheme, &mut rng);
                        let p = gen_pvalues(&dag, &truth, &scheme, NullModel::Independent, &mut rng);
                        reports.push(reference_equivalence(&dag, &p, args.alpha, gamma)?);
                    }
                }
                (None, Some(_)) => {
                    return Err(Failure { code: EXIT_USAGE, message: "--pvalues needs --graph".into() });
                }
            }
            let pass = reports.iter().all(|r| r.equal);
            finish(out, "reference", pass, timestamp, &reports)
        }
    }
}
