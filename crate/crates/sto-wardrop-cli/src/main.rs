//! Command-line front end: scenario validation, equilibrium/optimum
//! solving, price-of-anarchy reports with bound verdicts, Monte Carlo
//! checks, and reference-table reproduction.
//!
//! Exit codes: 0 success, 2 validation error, 3 solver non-convergence,
//! 4 requested bound not applicable, 1 anything else. `STO_WARDROP_THREADS`
//! caps the worker count (results are identical for any worker count).

mod output;
mod reproduce;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sto_wardrop::{
    compute_poa, simulate_link_moment, simulate_total_cost, solve_so, solve_ue, solve_ue_from,
    EquilibriumResult, Error as LibError, Strategy,
};

use output::{emit_json, fmt_sig};
use scenario::Scenario;

/// A failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn new(message: String, code: u8) -> Self {
        Self { message, code }
    }

    pub fn validation(message: String) -> Self {
        Self::new(message, 2)
    }

    pub fn solver(message: String) -> Self {
        Self::new(message, 3)
    }

    pub fn bound_unavailable(message: String) -> Self {
        Self::new(message, 4)
    }

    pub fn io(message: String) -> Self {
        Self::new(message, 1)
    }

    pub fn from_library(err: LibError) -> Self {
        match err {
            LibError::NotConverged(_) => Self::solver(err.to_string()),
            LibError::NotApplicable(_) => Self::bound_unavailable(err.to_string()),
            _ => Self::validation(err.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "sto-wardrop",
    version,
    about = "Routing games with stochastic demands: equilibria, optima and price-of-anarchy bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file against the schema and network invariants.
    Validate { scenario: PathBuf },
    /// Compute a user equilibrium; emits the result as JSON.
    SolveUe {
        scenario: PathBuf,
        /// Start from the strategy in a previous solve-ue output (JSON).
        #[arg(long)]
        warm_start: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute a system optimum; emits the result as JSON.
    SolveSo {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the empirical price of anarchy with every bound verdict.
    Poa {
        scenario: PathBuf,
        /// Fail (exit 4) unless the named bound applies to the instance.
        #[arg(long, value_enum)]
        require_bound: Option<BoundName>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo estimate of the total cost (or one link moment) under
    /// the uniform strategy or a supplied one.
    Mc(McArgs),
    /// Regenerate the reference tables and curves as CSV.
    Reproduce {
        #[command(subcommand)]
        what: ReproduceCommand,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundName {
    Affine,
    Positive,
    Normal,
}

impl BoundName {
    fn key(self) -> &'static str {
        match self {
            Self::Affine => "affine",
            Self::Positive => "polynomial_positive",
            Self::Normal => "polynomial_normal",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum McTarget {
    /// Expected total cost.
    Total,
    /// One raw link-flow moment (needs --edge and --order).
    Moment,
}

#[derive(Args)]
struct McArgs {
    scenario: PathBuf,
    #[arg(long)]
    samples: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "total")]
    target: McTarget,
    /// Edge id for --target moment.
    #[arg(long)]
    edge: Option<String>,
    /// Moment order for --target moment.
    #[arg(long)]
    order: Option<usize>,
    /// Strategy to simulate (JSON from solve-ue/solve-so); defaults to the
    /// uniform strategy.
    #[arg(long)]
    strategy: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ReproduceCommand {
    /// Affine two-link benchmark at one coefficient of variation.
    Example1 {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monomial two-link benchmark.
    Example2 {
        #[arg(long)]
        j: usize,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Moment-ratio applicability thresholds for m = 2, 3, 4.
    Table1 {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Largest applicable uniform spread for m = 2, 3, 4.
    Table2 {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Maximum applicable coefficient of variation over n = 1..n-max.
    Fig2 {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Degree-2 bound curves over the coefficient of variation, one column
    /// per n plus the large-n limit.
    Fig3 {
        /// Comma-separated list of n values, e.g. 1,5,10,20.
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct ValidationSummary {
    valid: bool,
    nodes: usize,
    edges: usize,
    commodities: usize,
    paths_per_commodity: Vec<usize>,
    enumeration_truncated: bool,
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}

fn configure_threads() {
    if let Ok(value) = std::env::var("STO_WARDROP_THREADS") {
        if let Ok(threads) = value.trim().parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { scenario } => {
            let scenario = Scenario::from_file(&scenario)?;
            let network = scenario.build_network()?;
            let summary = ValidationSummary {
                valid: true,
                nodes: network.num_nodes(),
                edges: network.num_edges(),
                commodities: network.num_commodities(),
                paths_per_commodity: (0..network.num_commodities())
                    .map(|i| network.num_paths(i))
                    .collect(),
                enumeration_truncated: network.any_truncated(),
            };
            emit_json(None, &summary)
        }
        Command::SolveUe {
            scenario,
            warm_start,
            out,
        } => {
            let scenario = Scenario::from_file(&scenario)?;
            let network = scenario.build_network()?;
            let config = scenario.solver_config();
            let result = match warm_start {
                Some(path) => {
                    let start = load_strategy(&path)?;
                    solve_ue_from(&network, &config, &start).map_err(CliError::from_library)?
                }
                None => solve_ue(&network, &config).map_err(CliError::from_library)?,
            };
            emit_json(out.as_deref(), &result)?;
            if result.converged {
                Ok(())
            } else {
                Err(CliError::solver(format!(
                    "equilibrium gap {} above tolerance {}",
                    fmt_sig(result.relative_gap),
                    fmt_sig(config.relative_gap_tolerance)
                )))
            }
        }
        Command::SolveSo { scenario, out } => {
            let scenario = Scenario::from_file(&scenario)?;
            let network = scenario.build_network()?;
            let config = scenario.solver_config();
            let result = solve_so(&network, &config).map_err(CliError::from_library)?;
            emit_json(out.as_deref(), &result)?;
            if result.converged {
                Ok(())
            } else {
                Err(CliError::solver(format!(
                    "optimum stationarity {} above tolerance {}",
                    fmt_sig(result.projected_gradient_norm),
                    fmt_sig(config.so_gradient_tolerance)
                )))
            }
        }
        Command::Poa {
            scenario,
            require_bound,
            out,
        } => {
            let scenario = Scenario::from_file(&scenario)?;
            let network = scenario.build_network()?;
            let config = scenario.solver_config();
            let report = compute_poa(&network, &config).map_err(CliError::from_library)?;
            emit_json(out.as_deref(), &report)?;
            if let Some(required) = require_bound {
                let found = report
                    .bounds
                    .iter()
                    .find(|b| b.name == required.key())
                    .filter(|b| b.applicable);
                if found.is_none() {
                    let reason = report
                        .bounds
                        .iter()
                        .find(|b| b.name == required.key())
                        .and_then(|b| b.violated_condition.clone())
                        .unwrap_or_else(|| "bound not computed".into());
                    return Err(CliError::bound_unavailable(format!(
                        "required bound '{}' is not applicable: {reason}",
                        required.key()
                    )));
                }
            }
            Ok(())
        }
        Command::Mc(args) => {
            let scenario = Scenario::from_file(&args.scenario)?;
            let network = scenario.build_network()?;
            let strategy = match &args.strategy {
                Some(path) => load_strategy(path)?,
                None => Strategy::uniform(&network),
            };
            let estimate = match args.target {
                McTarget::Total => {
                    simulate_total_cost(&strategy, &network, args.samples, args.seed)
                        .map_err(CliError::from_library)?
                }
                McTarget::Moment => {
                    let edge_id = args.edge.as_deref().ok_or_else(|| {
                        CliError::validation("--target moment requires --edge".into())
                    })?;
                    let order = args.order.ok_or_else(|| {
                        CliError::validation("--target moment requires --order".into())
                    })?;
                    let edge = network.edge_index(edge_id).ok_or_else(|| {
                        CliError::validation(format!("unknown edge {edge_id}"))
                    })?;
                    simulate_link_moment(edge, order, &strategy, &network, args.samples, args.seed)
                        .map_err(CliError::from_library)?
                }
            };
            emit_json(args.out.as_deref(), &estimate)
        }
        Command::Reproduce { what } => match what {
            ReproduceCommand::Example1 { theta, out } => reproduce::example1(theta, out.as_deref()),
            ReproduceCommand::Example2 { j, theta, out } => {
                reproduce::example2(j, theta, out.as_deref())
            }
            ReproduceCommand::Table1 { out } => reproduce::table1(out.as_deref()),
            ReproduceCommand::Table2 { out } => reproduce::table2(out.as_deref()),
            ReproduceCommand::Fig2 { m, n_max, out } => reproduce::fig2(m, n_max, out.as_deref()),
            ReproduceCommand::Fig3 { n, out } => reproduce::fig3(&n, out.as_deref()),
        },
    }
}

/// Loads a strategy from a solve-ue/solve-so output (taking its
/// `strategy` field) or from a bare probability-array JSON.
fn load_strategy(path: &std::path::Path) -> Result<Strategy, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|err| CliError::validation(format!("cannot read {}: {err}", path.display())))?;
    if let Ok(result) = serde_json::from_str::<EquilibriumResult>(&text) {
        return Ok(result.strategy);
    }
    #[derive(serde::Deserialize)]
    struct HasStrategy {
        strategy: Strategy,
    }
    if let Ok(wrapped) = serde_json::from_str::<HasStrategy>(&text) {
        return Ok(wrapped.strategy);
    }
    serde_json::from_str::<Strategy>(&text).map_err(|err| {
        CliError::validation(format!(
            "{}: not a strategy or solver output: {err}",
            path.display()
        ))
    })
}
