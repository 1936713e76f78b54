//! Command-line front end: `supaq <command> [options]`.
//!
//! Exit codes: 0 success, 1 domain or validation error, 2 usage error.

pub mod inputs;
pub mod report;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use supaq_core::ball::minimax_ball;
use supaq_core::capacity::{finite_n_capacity, holevo_capacity, private_capacity_lb, OptimizerConfig};
use supaq_core::channels::load_channel;
use supaq_core::coreset::{cluster, MedianSet, MuSimilarDomain, WeightedStateSet};
use supaq_core::superactivation::{fmt12, linear_grid, sweep, EvaluatorKind, SweepConfig};
use supaq_core::Error;

pub use inputs::{parse_channel_uri, InputError};
pub use report::{capacity_csv, sweep_csv, write_report, CsvReport};

#[derive(Debug, Parser)]
#[command(name = "supaq", version, about = "Quantum channel capacities as relative-entropy ball radii")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Search {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    /// Objective evaluations per restart.
    #[arg(long, default_value_t = 50_000)]
    max_evals: usize,
    #[arg(long)]
    ensemble_size: Option<usize>,
}

impl Search {
    fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            restarts: self.restarts,
            ensemble_size: self.ensemble_size,
            seed: self.seed,
            max_evals: self.max_evals,
            ..OptimizerConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Quantity {
    Holevo,
    Coherent,
    Private,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Evaluator {
    PaperConstants,
    CoherentSearch,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lower bound on a single- or two-use capacity of one channel.
    Capacity {
        #[arg(long)]
        channel: String,
        #[arg(long, value_enum)]
        quantity: Quantity,
        /// Channel uses (1 or 2; coherent only).
        #[arg(long, default_value_t = 1)]
        uses: usize,
        #[command(flatten)]
        search: Search,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// r_super(p) over a grid of mixing probabilities.
    Sweep {
        #[arg(long, value_enum)]
        evaluator: Evaluator,
        /// start:stop:step
        #[arg(long, default_value = "0:0.1:1e-4")]
        grid: String,
        #[arg(long)]
        channel_a: Option<String>,
        #[arg(long)]
        channel_b: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        threshold: f64,
        #[command(flatten)]
        search: Search,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// k-median clustering of a state set.
    Cluster {
        #[arg(long)]
        states: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.3)]
        eps: f64,
        #[arg(long, default_value_t = 0.3)]
        delta: f64,
        #[arg(long, default_value_t = 1e-4)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0 - 1e-4)]
        gamma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smallest enclosing relative-entropy ball of a state set.
    Ball {
        #[arg(long)]
        states: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 20_000)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Checks a channel file (shape and completeness).
    ValidateChannel {
        #[arg(long)]
        file: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::Domain(e.to_string())
    }
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        match e {
            InputError::Usage(m) => Self::Usage(m),
            InputError::Domain(e) => Self::Domain(e.to_string()),
        }
    }
}

/// Runs the CLI on `argv` (program name first) with the process streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { write!(out, "{rendered}") } else { write!(err, "{rendered}") };
            return code;
        }
    };
    let threads = match std::env::var("SUPAQ_THREADS") {
        Ok(v) => match v.parse::<usize>() {
            Ok(n) if n >= 1 => Some(n),
            _ => {
                let _ = writeln!(err, "error: SUPAQ_THREADS must be a positive integer (got '{v}')");
                return 2;
            }
        },
        Err(_) => None,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    let mut buffer = Vec::new();
    let outcome = pool.install(|| dispatch(cli.command, &mut buffer));
    if let Err(e) = out.write_all(&buffer).and_then(|_| out.flush()) {
        let _ = writeln!(err, "error: {e}");
        return 1;
    }
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "usage error: {m}");
            2
        }
        Err(Failure::Domain(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
    }
}

fn emit(csv: &CsvReport, path: Option<&Path>, out: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => write_report(csv, p).map_err(Failure::from),
        None => out
            .write_all(csv.render().as_bytes())
            .map_err(|e| Failure::Domain(e.to_string())),
    }
}

fn say(out: &mut dyn Write, line: String) -> Result<(), Failure> {
    writeln!(out, "{line}").map_err(|e| Failure::Domain(e.to_string()))
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Capacity {
            channel,
            quantity,
            uses,
            search,
            out: path,
        } => {
            let ch = parse_channel_uri(&channel)?;
            let cfg = search.config();
            let (name, result) = match quantity {
                Quantity::Holevo if uses == 1 => ("holevo", holevo_capacity(&ch, &cfg)?),
                Quantity::Private if uses == 1 => ("private", private_capacity_lb(&ch, &cfg)?),
                Quantity::Coherent => ("coherent", finite_n_capacity(&ch, uses, &cfg)?),
                _ => return Err(Failure::Usage("--uses applies to --quantity coherent only".into())),
            };
            if let Some(p) = path {
                let mut csv = capacity_csv(name, &channel, uses, &result);
                csv.meta(format!("seed={}", search.seed));
                write_report(&csv, &p)?;
            }
            say(out, fmt12(result.value))
        }
        Command::Sweep {
            evaluator,
            grid,
            channel_a,
            channel_b,
            threshold,
            search,
            out: path,
        } => {
            let parts: Vec<f64> = grid
                .split(':')
                .map(|s| s.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| Failure::Usage(format!("--grid expects start:stop:step (got '{grid}')")))?;
            let [start, stop, step] = parts[..] else {
                return Err(Failure::Usage(format!("--grid expects start:stop:step (got '{grid}')")));
            };
            let load = |u: Option<String>| u.map(|u| parse_channel_uri(&u)).transpose();
            let evaluator = match evaluator {
                Evaluator::PaperConstants => EvaluatorKind::PaperConstants,
                Evaluator::CoherentSearch => {
                    if channel_a.is_none() || channel_b.is_none() {
                        return Err(Failure::Usage("coherent-search needs --channel-a and --channel-b".into()));
                    }
                    EvaluatorKind::CoherentSearch
                }
            };
            let cfg = SweepConfig {
                p_grid: linear_grid(start, stop, step)?,
                channel_a: load(channel_a)?,
                channel_b: load(channel_b)?,
                evaluator,
                threshold,
                seed: search.seed,
                optimizer: search.config(),
            };
            let report = sweep(&cfg)?;
            emit(&sweep_csv(&report), path.as_deref(), out)
        }
        Command::Cluster {
            states,
            k,
            eps,
            delta,
            lambda,
            gamma,
            seed,
            out: path,
        } => {
            let set = inputs::load_states(&states)?;
            if k == 0 {
                return Err(Failure::Usage("--k must be >= 1".into()));
            }
            let dom = MuSimilarDomain::new(lambda, gamma)?;
            let weighted = match set.weights {
                Some(w) => WeightedStateSet::new(set.states, w)?,
                None => WeightedStateSet::unit(set.states)?,
            };
            let found = cluster(&weighted, k, &MedianSet::empty(), eps, delta, &dom, seed)?;
            let mut csv = CsvReport::new(&["median", "row", "col", "re", "im"]);
            csv.meta(format!("seed={seed}"))
                .meta(format!("k={k} eps={} delta={}", fmt12(eps), fmt12(delta)))
                .meta(format!("error={}", fmt12(found.error)))
                .meta(format!("nodes={} truncated_nodes={}", found.nodes, found.truncated_nodes));
            for (i, m) in found.medians.medians().iter().enumerate() {
                let mat = m.matrix();
                for r in 0..mat.nrows() {
                    for col in 0..mat.ncols() {
                        csv.push(&[i as f64, r as f64, col as f64, mat[(r, col)].re, mat[(r, col)].im]);
                    }
                }
            }
            emit(&csv, path.as_deref(), out)
        }
        Command::Ball {
            states,
            tol,
            max_iter,
            out: path,
        } => {
            let set = inputs::load_states(&states)?;
            let ball = minimax_ball(&set.states, tol, max_iter)?;
            let mut csv = CsvReport::new(&["index", "weight", "distance", "support"]);
            csv.meta(format!("radius={}", fmt12(ball.radius)))
                .meta(format!("lower_bound={}", fmt12(ball.lower_bound)))
                .meta(format!("converged={} iterations={}", ball.converged, ball.iterations));
            let center = supaq_core::qstate::PreparedCenter::new(ball.center.clone());
            for (i, s) in set.states.iter().enumerate() {
                let d = center.divergence(&supaq_core::qstate::PreparedState::new(s.clone()));
                let support = if ball.support.contains(&i) { 1.0 } else { 0.0 };
                csv.push(&[i as f64, ball.weights[i], d, support]);
            }
            emit(&csv, path.as_deref(), out)
        }
        Command::ValidateChannel { file } => {
            let ch = load_channel(&file)?;
            say(
                out,
                format!(
                    "ok dim_in={} dim_out={} kraus={} residual={}",
                    ch.dim_in(),
                    ch.dim_out(),
                    ch.kraus().len(),
                    fmt12(ch.completeness_residual())
                ),
            )
        }
    }
}
