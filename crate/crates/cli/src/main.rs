//! `kcx`: explain predictions of compiled classifiers from the command line.
//!
//! Exit status: 0 success, 1 verification mismatch, 2 bad input, 3 model
//! failed the structural check, 4 brute-force bound exceeded, 5 classifier
//! is constant and contrastive output was requested.

mod commands;
mod model;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kcx::explain::ExplainError;
use kcx::Order;

#[derive(Parser)]
#[command(name = "kcx", version, about = "Formal explanations for compiled classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report structural properties of the model.
    Check(Common),
    /// Compute one abductive explanation.
    Axp(Explain),
    /// Compute one contrastive explanation.
    Cxp(Explain),
    /// Enumerate all abductive and contrastive explanations.
    Enumerate(Explain),
    /// Cross-check enumeration against exhaustive search.
    Verify(Verify),
    /// Explanation counts, sizes and timings.
    Stats(Explain),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Format {
    Nnf,
    Sdd,
    Tree,
    Gdf,
}

#[derive(Args)]
pub struct Common {
    /// Model file.
    #[arg(long)]
    model: PathBuf,
    /// Model format; inferred from the extension for .nnf and .sdd.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Number of features (required for SDD input).
    #[arg(long)]
    num_features: Option<usize>,
    /// Write output here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Human-readable output.
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
pub struct Explain {
    #[command(flatten)]
    common: Common,
    /// Instance values, e.g. `0,1,1,0` or `0110`.
    #[arg(long)]
    instance: Option<String>,
    /// CSV file of instances.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Row of the CSV file, counted from 0 after the header.
    #[arg(long)]
    row: Option<usize>,
    /// Feature order for shrinking: `ascending`, `shuffled`, or a
    /// permutation such as `4,3,2,1`.
    #[arg(long, default_value = "ascending")]
    order: String,
    /// Seed for the `shuffled` order.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stop enumeration after this many explanations.
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Args)]
pub struct Verify {
    #[command(flatten)]
    explain: Explain,
    /// Drop the last enumerated explanation before comparing.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

/// An error together with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn input(error: anyhow::Error) -> Self {
        Failure { code: 2, error }
    }

    pub fn structure(error: anyhow::Error) -> Self {
        Failure { code: 3, error }
    }

    pub fn bound(error: anyhow::Error) -> Self {
        Failure { code: 4, error }
    }

    pub fn explain(e: ExplainError) -> Self {
        let code = match e {
            ExplainError::ConstantClassifier(_) => 5,
            _ => 2,
        };
        Failure {
            code,
            error: e.into(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::input(e.into())
    }
}

pub fn parse_order(text: &str, seed: u64) -> Result<Order, Failure> {
    match text {
        "ascending" | "asc" => Ok(Order::Ascending),
        "shuffled" | "shuffle" => Ok(Order::Shuffled(seed)),
        list => list
            .split(',')
            .map(|t| t.trim().parse())
            .collect::<Result<Vec<_>, _>>()
            .map(Order::Explicit)
            .map_err(|_| Failure::input(anyhow::anyhow!("bad --order {list:?}"))),
    }
}

pub fn sink(path: Option<&PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check(c) => commands::check(c),
        Command::Axp(e) => commands::single(e, kcx::Kind::Axp),
        Command::Cxp(e) => commands::single(e, kcx::Kind::Cxp),
        Command::Enumerate(e) => commands::enumerate(e),
        Command::Verify(v) => commands::verify(v),
        Command::Stats(e) => commands::stats(e),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("kcx: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
