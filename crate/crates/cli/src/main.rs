//! `margulis`: build surface groups, affine deformations and their
//! coordinates from JSON specs, and check the cosine formula for twist
//! deformations.

mod commands;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{CmdResult, CoordsSource, Failure, Outcome, Tolerances, WordSource};

#[derive(Parser)]
#[command(
    name = "margulis",
    version,
    about = "Margulis invariants and twist deformations of surface groups"
)]
struct Cli {
    /// Seed for the randomized suites.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Absolute tolerance for algebraic comparisons (command-specific default).
    #[arg(long, global = true)]
    tol_alg: Option<f64>,
    /// Relative tolerance for finite-difference comparisons.
    #[arg(long, global = true, default_value_t = 1e-5)]
    tol_fd: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Allow twists along non-separating handle generators (reported, not checked).
    #[arg(long, global = true)]
    experimental: bool,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble a surface group and list generators and curve lengths.
    Surface { spec: PathBuf },
    /// Coordinates to cocycles and back, with the measured invariants.
    Coords {
        spec: PathBuf,
        /// A coordinate object or an array of them.
        #[arg(required_unless_present = "random", conflicts_with = "random")]
        coords: Option<PathBuf>,
        /// Use N random coordinate vectors instead of a file.
        #[arg(long, value_name = "N")]
        random: Option<usize>,
        /// Also write the cocycles (one per vector) to this file.
        #[arg(long)]
        cocycle_out: Option<PathBuf>,
    },
    /// Compare Margulis invariants of a twist, cosine sums and length derivatives.
    VerifyCosine {
        spec: PathBuf,
        /// f_k, g_j, or with --experimental w1_j / w2_j.
        #[arg(long)]
        curve: String,
        /// File with one word per line.
        #[arg(long, required_unless_present = "random", conflicts_with = "random")]
        words: Option<PathBuf>,
        #[arg(long, value_name = "N")]
        random: Option<usize>,
    },
    /// Coefficient structure of the Margulis invariants of a once-holed torus.
    TorusReport {
        #[arg(allow_negative_numbers = true)]
        l1: f64,
        #[arg(allow_negative_numbers = true)]
        l2: f64,
        #[arg(allow_negative_numbers = true)]
        theta: f64,
    },
}

fn run(cli: &Cli) -> CmdResult<Outcome> {
    match &cli.command {
        Command::Surface { spec } => commands::surface(spec, cli.tol_alg.unwrap_or(1e-8)),
        Command::Coords {
            spec,
            coords,
            random,
            cocycle_out,
        } => {
            let source = match (coords, random) {
                (Some(p), _) => CoordsSource::File(p),
                (None, Some(n)) => CoordsSource::Random {
                    count: *n,
                    seed: cli.seed,
                },
                (None, None) => unreachable!("clap requires one of them"),
            };
            commands::coords(
                spec,
                source,
                cli.tol_alg.unwrap_or(1e-8),
                cocycle_out.as_deref(),
            )
        }
        Command::VerifyCosine {
            spec,
            curve,
            words,
            random,
        } => {
            let source = match (words, random) {
                (Some(p), _) => WordSource::File(p),
                (None, Some(n)) => WordSource::Random {
                    count: *n,
                    seed: cli.seed,
                },
                (None, None) => unreachable!("clap requires one of them"),
            };
            let tol = Tolerances {
                alg: cli.tol_alg.unwrap_or(1e-9),
                fd: cli.tol_fd,
            };
            commands::verify_cosine(spec, curve, source, tol, cli.experimental)
        }
        Command::TorusReport { l1, l2, theta } => {
            commands::torus(*l1, *l2, *theta, cli.tol_alg.unwrap_or(1e-9))
        }
    }
}

fn emit(cli: &Cli, out: &Outcome) -> CmdResult<()> {
    let text = match cli.format {
        Format::Json => out.json.clone(),
        Format::Csv => out.table.to_csv(),
    };
    match &cli.output {
        Some(p) => {
            fs::write(p, text).map_err(|e| Failure::input("io", format!("{}: {e}", p.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|out| emit(&cli, &out).map(|_| out.pass));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(commands::EXIT_NUMERIC as u8),
        Err(f) => {
            eprint!("{}", output::to_json(&f));
            ExitCode::from(f.code as u8)
        }
    }
}
