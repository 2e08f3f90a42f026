//! `hfm`: distance-based fairness reports from CSV data.
//!
//! Exit codes: 0 success, 2 input or schema error, 3 computation error.

mod args;
mod commands;

use std::fmt;
use std::process::ExitCode;

use clap::{ColorChoice, CommandFactory, FromArgMatches, Parser, Subcommand};

use args::{ApproxArgs, DataArgs, MethodArg, OutputArgs};
use commands::{BenchArgs, SourceArg, TheoryArgs};

#[derive(Debug, Parser)]
#[command(
    name = "hfm",
    version,
    about = "Manifold-distance fairness measure for classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Max-min distance between the two groups.
    Dist {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, default_value_t = MethodArg::Exact)]
        method: MethodArg,
        /// Label slot of the metric.
        #[arg(long, value_enum, default_value_t = SourceArg::TrueLabels)]
        label_source: SourceArg,
        #[command(flatten)]
        approx: ApproxArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Distances under true labels and predictions, and the fairness measure.
    Hfm {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, default_value_t = MethodArg::Exact)]
        method: MethodArg,
        #[command(flatten)]
        approx: ApproxArgs,
        /// Adds `alpha * error_rate + (1 - alpha) * |df|` to the report.
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Demographic parity, equal opportunity, predictive quality parity and
    /// (with --prediction-flipped) discriminative risk.
    GroupMetrics {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exact versus approximate distance on synthetic or provided data.
    Bench(BenchArgs),
    /// Projection-probability checks and success-bound tables.
    VerifyTheory(TheoryArgs),
}

/// An error tagged with its exit code.
#[derive(Debug)]
pub struct CliError {
    code: u8,
    source: anyhow::Error,
}

impl CliError {
    pub fn input(msg: impl fmt::Display) -> Self {
        CliError {
            code: 2,
            source: anyhow::anyhow!("{msg}"),
        }
    }

    pub fn compute(msg: impl fmt::Display) -> Self {
        CliError {
            code: 3,
            source: anyhow::anyhow!("{msg}"),
        }
    }
}

impl From<hfm_core::Error> for CliError {
    fn from(e: hfm_core::Error) -> Self {
        CliError {
            code: if e.is_input_error() { 2 } else { 3 },
            source: e.into(),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Dist {
            data,
            method,
            label_source,
            approx,
            output,
        } => commands::dist(&data, method, label_source, &approx, &output),
        Command::Hfm {
            data,
            method,
            approx,
            alpha,
            output,
        } => commands::hfm(&data, method, &approx, alpha, &output),
        Command::GroupMetrics { data, output } => commands::group_metrics(&data, &output),
        Command::Bench(a) => commands::bench(&a),
        Command::VerifyTheory(a) => commands::verify_theory(&a),
    }
}

fn main() -> ExitCode {
    // `bench` takes the data flags optionally: all of them or none.
    let mut cmd = Cli::command().mut_subcommand("bench", |s| {
        let needed = ["features", "sensitive", "privileged", "label"];
        let s = s.mut_arg("input", |a| {
            needed
                .iter()
                .fold(a.required(false), |a, id| a.requires(*id))
        });
        needed.iter().fold(s, |s, id| {
            s.mut_arg(*id, |a| a.required(false).requires("input"))
        })
    });
    if std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty()) {
        cmd = cmd.color(ColorChoice::Never);
    }
    let cli = match cmd
        .try_get_matches()
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.source);
            ExitCode::from(e.code)
        }
    }
}
