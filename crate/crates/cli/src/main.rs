mod commands;
mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

/// Nested logit models: analytic probabilities, Emax and CDF, plus simulation
/// through the positive stable factor representation.
#[derive(Debug, Parser)]
#[command(name = "nestlogit", version)]
pub struct Cli {
    /// Cap on worker threads for stochastic commands (results do not depend on it).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Print an aligned key/value table instead of JSON.
    #[arg(long, global = true)]
    pretty: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model file (JSON).
    pub model: PathBuf,

    /// Utility overrides, `leafid=value[,leafid=value...]`.
    #[arg(long, value_name = "PAIRS")]
    pub utilities: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Analytic,
    Mc,
    Mixed,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a model file and report tree metrics.
    Validate {
        model: PathBuf,
    },
    /// Choice probabilities per alternative.
    Probs {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value = "analytic")]
        method: Method,
        #[arg(long)]
        draws: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Backward-induction utility (Emax without the Euler constant) at a node.
    Emax {
        #[command(flatten)]
        model: ModelArgs,
        /// Node id; defaults to the root.
        #[arg(long)]
        node: Option<String>,
        /// Also list the utility of every node.
        #[arg(long)]
        all: bool,
        /// Add a Monte Carlo estimate of the root value with this many draws.
        #[arg(long)]
        draws: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare the analytic gradient of the root utility with finite differences.
    GradCheck {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = nestlogit::verify::FD_STEP)]
        step: f64,
        #[arg(long, default_value_t = nestlogit::verify::FD_TOL)]
        tol: f64,
    },
    /// Joint CDF Pr(ε ≤ A) at thresholds A.
    Cdf {
        #[command(flatten)]
        model: ModelArgs,
        /// Thresholds: either `leafid=value` pairs covering every leaf, or plain
        /// comma-separated values in leaf order.
        #[arg(long, value_name = "A", allow_hyphen_values = true)]
        at: String,
        #[arg(long)]
        draws: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Draw error vectors and write them as CSV.
    Sample {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        draws: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Positive stable distribution P(λ) utilities.
    Stable {
        #[command(subcommand)]
        op: StableOp,
    },
    /// Run the invariant checks on a model; exit 2 if any fails.
    Verify {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1_000_000)]
        draws: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON file with reference `probabilities` (by leaf id) and/or `emax`.
        #[arg(long)]
        expected: Option<PathBuf>,
    },
    /// Correlation of the Fréchet pair coupled by a Gumbel copula.
    FrechetCorr {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        lambda: f64,
        /// Monte Carlo draws for an empirical estimate.
        #[arg(long, value_name = "N")]
        mc: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write an example or random model file.
    Generate {
        /// Named example.
        #[arg(long, conflicts_with = "random")]
        example: Option<String>,
        /// Random tree from the given seed.
        #[arg(long, value_name = "SEED")]
        random: Option<u64>,
        #[arg(long, default_value_t = 50)]
        max_nodes: usize,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum StableOp {
    /// Draw Z ~ P(λ); reports summary moments, optionally writes the draws.
    Sample {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        draws: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Density by series; at λ = 0.5 the closed form is shown as well.
    Density {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 1e-15)]
        tol: f64,
    },
    /// E[Z^κ], optionally with a Monte Carlo estimate.
    Moment {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        draws: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// E[exp(-tZ)] against exp(-t^λ).
    Laplace {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 1_000_000)]
        draws: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

pub const EXIT_INPUT: u8 = 1;
pub const EXIT_CHECK_FAILED: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_INPUT);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    match commands::run(cli.command) {
        Ok(outcome) => {
            if let Some(report) = &outcome.report {
                let text = if cli.pretty { report.render_table() } else { report.render_json() };
                let mut out = std::io::stdout().lock();
                if out.write_all(text.as_bytes()).and_then(|_| out.flush()).is_err() {
                    return ExitCode::from(EXIT_INPUT);
                }
            }
            if outcome.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                for f in &outcome.failures {
                    eprintln!("check failed: {f}");
                }
                ExitCode::from(EXIT_CHECK_FAILED)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
