//! Command line front end: weighted-Lasso solves, the adaptive pipeline,
//! design-condition reports, graphical model selection, and the Monte Carlo
//! simulation harness.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use adalasso::adaptive::{adaptive_lasso, AdaptiveConfig};
use adalasso::conditions::{condition_report, ReportOptions};
use adalasso::experiment::{
    emit_plotdata, emit_report, run_experiment, run_sweep, ExperimentConfig, ReportFormat,
};
use adalasso::ggm::{select_graph, to_dot, GgmConfig, PrecisionModel, SigmaSource};
use adalasso::io;
use adalasso::solver::{solve_weighted_lasso, SolverConfig};
use adalasso::{Constants, RegressionProblem, WeightVector};

#[derive(Parser)]
#[command(
    name = "adalasso",
    about = "Sparse regression and graphical model selection with the two-stage adaptive Lasso",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one weighted Lasso program and print the estimate as JSON.
    Solve(SolveArgs),
    /// Run the two-stage adaptive pipeline and print the full trace as JSON.
    Adaptive(AdaptiveArgs),
    /// Compute design-condition diagnostics and print the report as JSON.
    Check(CheckArgs),
    /// Estimate a Gaussian graphical model by neighborhood regressions.
    Ggm(GgmArgs),
    /// Run a Monte Carlo experiment from a JSON config.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    design: PathBuf,
    #[arg(long)]
    response: PathBuf,
    #[arg(long)]
    lambda: f64,
    /// CSV of per-coordinate weights (empty field not allowed; use large
    /// values or drop columns to exclude). Defaults to unit weights.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    /// Skip one header line in the CSV inputs.
    #[arg(long)]
    header: bool,
}

#[derive(Args)]
struct AdaptiveArgs {
    #[arg(long)]
    design: PathBuf,
    #[arg(long)]
    response: PathBuf,
    /// Known noise standard deviation.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long = "lambda-init")]
    lambda_init: Option<f64>,
    #[arg(long = "lambda-n")]
    lambda_n: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long = "M")]
    m_mult: Option<f64>,
    #[arg(long = "B")]
    b: Option<f64>,
    /// Position of lambda_n inside the admissible range (0 = lower end).
    #[arg(long, default_value_t = 0.0)]
    position: f64,
    #[arg(long)]
    header: bool,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    design: PathBuf,
    /// Population covariance for the Gram-deviation event check.
    #[arg(long = "sigma-matrix")]
    sigma_matrix: Option<PathBuf>,
    /// CSV of zero-based support indices for r_n / incoherence checks.
    #[arg(long)]
    support: Option<PathBuf>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k0: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long = "C2")]
    c2: Option<f64>,
    /// Random cone starts per subset for the K estimate.
    #[arg(long, default_value_t = 8)]
    budget: usize,
    #[arg(long)]
    header: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EdgeRule {
    And,
    Or,
    Both,
}

#[derive(Args)]
struct GgmArgs {
    #[arg(long)]
    samples: PathBuf,
    /// One noise scale for every node regression.
    #[arg(long, conflicts_with = "precision")]
    sigma: Option<f64>,
    /// Known precision matrix (simulation mode): per-node scales follow.
    #[arg(long)]
    precision: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = EdgeRule::Both)]
    rule: EdgeRule,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long = "M")]
    m_mult: Option<f64>,
    /// Write the selected graph as a DOT file.
    #[arg(long)]
    dot: Option<PathBuf>,
    #[arg(long)]
    header: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment config (JSON, full ExperimentConfig schema).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "json")]
    format: String,
    /// Worker threads (0 = rayon default). Results do not depend on this.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Exit with status 3 when any method's replicate failure rate exceeds
    /// this threshold.
    #[arg(long = "max-fail-rate", default_value_t = 1.0)]
    max_fail_rate: f64,
    /// Also write every replicate's generated dataset (design, response and
    /// true coefficients) as CSV files into this directory.
    #[arg(long = "export-data")]
    export_data: Option<PathBuf>,
}

fn constants_with(
    eta: Option<f64>,
    m_mult: Option<f64>,
    b: Option<f64>,
) -> anyhow::Result<Constants> {
    let mut constants = Constants::default();
    if let Some(eta) = eta {
        constants.eta = eta;
        // Keep M admissible when only eta is supplied.
        constants.m_mult = constants.m_mult.max(4.0 / eta);
    }
    if let Some(m) = m_mult {
        constants.m_mult = m;
    }
    if let Some(b) = b {
        constants.b = b;
    }
    Ok(constants.validated()?)
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> anyhow::Result<()> {
    let x = io::read_matrix(&args.design, args.header).context("reading design")?;
    let y = io::read_vector(&args.response, args.header).context("reading response")?;
    let p = x.ncols();
    let weights = match &args.weights {
        Some(path) => {
            let w = io::read_vector(path, args.header).context("reading weights")?;
            WeightVector::new(w.to_vec())?
        }
        None => WeightVector::unit(p),
    };
    let problem = RegressionProblem::new(x, y);
    let config = SolverConfig::new(args.lambda, weights)
        .with_tol(args.tol)
        .with_max_iter(args.max_iter);
    let estimate = solve_weighted_lasso(&problem, &config)?;
    print_json(&estimate)
}

fn cmd_adaptive(args: AdaptiveArgs) -> anyhow::Result<()> {
    let x = io::read_matrix(&args.design, args.header).context("reading design")?;
    let y = io::read_vector(&args.response, args.header).context("reading response")?;
    let mut problem = RegressionProblem::new(x, y);
    if let Some(sigma) = args.sigma {
        problem = problem.with_sigma(sigma);
    }
    let config = AdaptiveConfig {
        constants: constants_with(args.eta, args.m_mult, args.b)?,
        lambda_init: args.lambda_init,
        lambda_n: args.lambda_n,
        lambda_n_position: args.position,
        ..Default::default()
    };
    let trace = adaptive_lasso(&problem, &config)?;
    print_json(&trace)
}

fn cmd_check(args: CheckArgs) -> anyhow::Result<()> {
    let x = io::read_matrix(&args.design, args.header).context("reading design")?;
    let mut constants = Constants::default();
    if let Some(k0) = args.k0 {
        constants.k0 = k0;
    }
    if let Some(eta) = args.eta {
        constants.eta = eta;
        constants.m_mult = constants.m_mult.max(4.0 / eta);
    }
    if let Some(c0) = args.c0 {
        constants.c0 = c0;
    }
    if let Some(c2) = args.c2 {
        constants.c2 = c2;
    }
    let constants = constants.validated()?;
    let support = match &args.support {
        Some(path) => Some(io::read_index_set(path, args.header).context("reading support")?),
        None => None,
    };
    let sigma_matrix = match &args.sigma_matrix {
        Some(path) => Some(io::read_matrix(path, args.header).context("reading covariance")?),
        None => None,
    };
    let opts = ReportOptions {
        s: args.s,
        m: args.m,
        support,
        weights: None,
        noise: None,
        sigma_matrix,
        constants,
        budget: args.budget,
    };
    let report = condition_report(x.view(), &opts)?;
    print_json(&report)
}

#[derive(Serialize)]
struct NodeSummary {
    node: usize,
    neighbors: Vec<usize>,
    s_bar: usize,
    lambda_n: f64,
    converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    warning: Option<String>,
}

#[derive(Serialize)]
struct GgmOutput {
    and_edges: Vec<(usize, usize)>,
    or_edges: Vec<(usize, usize)>,
    disagreement: Vec<(usize, usize)>,
    per_node_summaries: Vec<NodeSummary>,
    failures: Vec<(usize, String)>,
    warnings: Vec<String>,
}

fn cmd_ggm(args: GgmArgs) -> anyhow::Result<()> {
    let samples = io::read_matrix(&args.samples, args.header).context("reading samples")?;
    let p = samples.ncols();
    let sigma = match (&args.sigma, &args.precision) {
        (Some(s), None) => SigmaSource::Fixed(*s),
        (None, Some(path)) => {
            let q = io::read_matrix(path, args.header).context("reading precision")?;
            SigmaSource::Precision(PrecisionModel::new(q)?)
        }
        (None, None) => bail!("either --sigma or --precision is required"),
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    };
    let config = GgmConfig {
        adaptive: AdaptiveConfig {
            constants: constants_with(args.eta, args.m_mult, None)?,
            ..Default::default()
        },
        sigma,
    };
    let graph = select_graph(&samples, &config)?;

    if let Some(path) = &args.dot {
        let dot = match args.rule {
            EdgeRule::And => to_dot(p, &graph.and_edges, None),
            EdgeRule::Or => to_dot(p, &graph.or_edges, None),
            EdgeRule::Both => to_dot(p, &graph.and_edges, Some(&graph.disagreement)),
        };
        std::fs::write(path, dot).context("writing DOT file")?;
    }

    let output = GgmOutput {
        and_edges: graph.and_edges.iter().copied().collect(),
        or_edges: graph.or_edges.iter().copied().collect(),
        disagreement: graph.disagreement.iter().copied().collect(),
        per_node_summaries: graph
            .per_node
            .iter()
            .map(|reg| NodeSummary {
                node: reg.node,
                neighbors: reg.neighbors.clone(),
                s_bar: reg.trace.s_bar,
                lambda_n: reg.trace.lambda_n_used,
                converged: reg.trace.final_estimate.converged,
                warning: reg.warning.clone(),
            })
            .collect(),
        failures: graph.failures.clone(),
        warnings: graph.warnings.clone(),
    };
    print_json(&output)
}

fn cmd_simulate(args: SimulateArgs) -> anyhow::Result<u8> {
    let text = std::fs::read_to_string(&args.config).context("reading config")?;
    let mut config: ExperimentConfig =
        serde_json::from_str(&text).context("parsing experiment config")?;
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    let format: ReportFormat = args.format.parse()?;

    if let Some(dir) = &args.export_data {
        std::fs::create_dir_all(dir).context("creating export directory")?;
        for rep in 0..config.replicates {
            let problem = adalasso::experiment::replicate_problem(&config, rep)?;
            io::write_matrix(dir.join(format!("design_{rep:04}.csv")), &problem.x)?;
            io::write_vector(dir.join(format!("response_{rep:04}.csv")), &problem.y)?;
            if let Some(truth) = &problem.truth {
                io::write_vector(dir.join(format!("beta_{rep:04}.csv")), &truth.beta_star)?;
            }
        }
    }

    let run = || -> anyhow::Result<u8> {
        if let Some(sweep) = config.sweep.clone() {
            let points = run_sweep(&config, &sweep)?;
            let x_name = match sweep.parameter {
                adalasso::experiment::SweepParameter::N => "n",
                adalasso::experiment::SweepParameter::BetaMin => "beta_min",
            };
            let paths = emit_plotdata(x_name, &points, &args.out)?;
            for path in &paths {
                println!("{}", path.display());
            }
            let worst = points
                .iter()
                .flat_map(|(_, r)| r.per_method.values())
                .map(|m| m.failures as f64 / config.replicates as f64)
                .fold(0.0f64, f64::max);
            return Ok(if worst > args.max_fail_rate { 3 } else { 0 });
        }

        let result = run_experiment(&config)?;
        let paths = emit_report(&result, config.scenario.n, format, &args.out)?;
        for path in &paths {
            println!("{}", path.display());
        }
        if let Some(secs) = result.wall_time_secs {
            eprintln!("wall time: {secs:.2}s");
        }
        let worst = result
            .per_method
            .values()
            .map(|m| m.failures as f64 / result.replicates as f64)
            .fold(0.0f64, f64::max);
        Ok(if worst > args.max_fail_rate { 3 } else { 0 })
    };

    if args.jobs > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs)
            .build()
            .map_err(|e| anyhow!("building worker pool: {e}"))?;
        pool.install(run)
    } else {
        run()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(args) => cmd_solve(args).map(|()| 0),
        Command::Adaptive(args) => cmd_adaptive(args).map(|()| 0),
        Command::Check(args) => cmd_check(args).map(|()| 0),
        Command::Ggm(args) => cmd_ggm(args).map(|()| 0),
        Command::Simulate(args) => cmd_simulate(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
