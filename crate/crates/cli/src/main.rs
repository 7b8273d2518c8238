use std::path::PathBuf;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use hyporbit_cli::commands::{
    cmd_build, cmd_certify, cmd_coverage, cmd_solve, resolve_precision, CoverageOpts, SolveOpts,
};
use hyporbit_cli::jsonio::envelope;
use hyporbit_core::error::Result;
use serde_json::Value;

#[derive(Parser)]
#[command(
    name = "hyporbit",
    version,
    about = "Orbit toolkit for commuting matrix tuples: build families, solve for \
             exponents, certify non-density, measure coverage"
)]
struct Cli {
    /// Working precision in bits (>= 64); the HYPORBIT_PRECISION_BITS
    /// environment variable is consulted when the flag is absent.
    #[arg(long, global = true)]
    precision_bits: Option<u32>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Emit a family's member matrices with a commutation report.
    Build {
        /// Family name (jordan-r2x4, jordan-c2x8, rot-pair-r2, rot-rot-pair-r2,
        /// r3-triple, even-n, odd-n).
        #[arg(long, conflicts_with = "custom")]
        family: Option<String>,
        /// Planar block count for even-n / odd-n.
        #[arg(long)]
        blocks: Option<usize>,
        /// Re-ingest a previous build output (result or full response JSON)
        /// as a custom tuple.
        #[arg(long)]
        custom: Option<PathBuf>,
    },
    /// Search for exponents whose orbit point approximates a target.
    Solve {
        #[arg(long)]
        family: String,
        #[arg(long)]
        blocks: Option<usize>,
        /// Comma-separated decimal coordinates.
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        #[arg(long, allow_hyphen_values = true)]
        eps: String,
        /// `reduced` or `ambient`.
        #[arg(long, default_value = "reduced")]
        metric: String,
        /// Ambient start vector, comma-separated decimals.
        #[arg(long, allow_hyphen_values = true)]
        start: Option<String>,
        #[arg(long)]
        max_exponent: Option<i64>,
        #[arg(long)]
        max_candidates: Option<u64>,
    },
    /// Certificate of non-density for a 2x2 diagonal/Jordan pair, with a
    /// finite re-verification scan.
    Certify {
        /// `diag-diag`, `diag-jordan`, or `jordan-jordan`.
        #[arg(long)]
        pair: String,
        #[arg(short, long, allow_hyphen_values = true)]
        a: String,
        #[arg(short, long, allow_hyphen_values = true)]
        b: String,
        #[arg(long)]
        max_exponent: Option<i64>,
        #[arg(long)]
        max_candidates: Option<u64>,
    },
    /// Enumerate exponent tuples and report which grid cells of a box their
    /// orbit points hit.
    Coverage {
        #[arg(long)]
        family: String,
        #[arg(long)]
        blocks: Option<usize>,
        /// Custom Jordan-cell diagonals, comma-separated (family `custom`).
        #[arg(long, allow_hyphen_values = true)]
        members: Option<String>,
        /// Per-axis bounds `lo:hi,lo:hi,…`.
        #[arg(long = "box", allow_hyphen_values = true)]
        box_spec: String,
        /// Cells per axis.
        #[arg(long)]
        grid: usize,
        /// Exponent cap.
        #[arg(long)]
        cap: i64,
        /// `per-exponent` or `total-sum`.
        #[arg(long, default_value = "per-exponent")]
        cap_mode: String,
        #[arg(long)]
        max_candidates: Option<u64>,
        /// `reduced` or `ambient`.
        #[arg(long, default_value = "reduced")]
        mode: String,
        /// Ambient start vector, comma-separated (f64).
        #[arg(long, allow_hyphen_values = true)]
        start: Option<String>,
        /// Write the per-cell histogram CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn run(cli: &Cli) -> Result<Value> {
    let ctx = resolve_precision(cli.precision_bits)?;
    match &cli.cmd {
        Cmd::Build { family, blocks, custom } => {
            cmd_build(family.as_deref(), *blocks, custom.as_deref(), ctx)
        }
        Cmd::Solve {
            family,
            blocks,
            target,
            eps,
            metric,
            start,
            max_exponent,
            max_candidates,
        } => cmd_solve(
            &SolveOpts {
                family,
                blocks: *blocks,
                target,
                eps,
                metric,
                start: start.as_deref(),
                max_exponent: *max_exponent,
                max_candidates: *max_candidates,
            },
            ctx,
        ),
        Cmd::Certify { pair, a, b, max_exponent, max_candidates } => {
            cmd_certify(pair, a, b, *max_exponent, *max_candidates, ctx)
        }
        Cmd::Coverage {
            family,
            blocks,
            members,
            box_spec,
            grid,
            cap,
            cap_mode,
            max_candidates,
            mode,
            start,
            csv,
        } => cmd_coverage(
            &CoverageOpts {
                family,
                blocks: *blocks,
                members: members.as_deref(),
                box_spec,
                grid: *grid,
                cap: *cap,
                cap_mode,
                max_candidates: *max_candidates,
                mode,
                start: start.as_deref(),
                csv: csv.as_deref(),
            },
            ctx,
        ),
    }
}

fn main() {
    let started = Instant::now();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            std::process::exit(0);
        }
        Err(e) => {
            let outcome = Err(hyporbit_core::error::Error::BadInput(e.to_string()));
            let (doc, code) = envelope(&outcome, 0);
            println!("{doc}");
            std::process::exit(code);
        }
    };
    let outcome = run(&cli);
    let elapsed_ms = started.elapsed().as_millis() as u64;
    let (doc, code) = envelope(&outcome, elapsed_ms);
    println!("{doc}");
    std::process::exit(code);
}
