use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gamescape::gamescape::{EmbeddingMethod, SynthKind, SynthSpec};
use gamescape::harness::{cmd_analyze, cmd_compare, cmd_run, cmd_synth, load_matrix, read_population, RunConfig};
use gamescape::nash::DEFAULT_TOL;
use gamescape::{Error, EvalConfig};

#[derive(Parser)]
#[command(name = "gamescape", version, about = "Population training and gamescape analysis for functional-form games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a population from a JSON run config and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relative performance of population P against population Q.
    Compare {
        p: PathBuf,
        q: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Seed for stochastic payoffs.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report path; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Nash, diversity, rank, Hodge split, embedding and redundancy of a matrix CSV or a
    /// population file.
    Analyze {
        input: PathBuf,
        #[arg(long, default_value = "schur")]
        embedding: EmbeddingMethod,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for the CSV and JSON bundle.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic antisymmetric payoff matrix.
    Synth {
        /// random, almost_transitive, almost_cyclic, almost_monotonic or mixed.
        #[arg(long)]
        kind: SynthKind,
        #[arg(long, default_value_t = 40)]
        n: usize,
        #[arg(long, default_value_t = 0.02)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Half-width of the noiseless rating range.
        #[arg(long, default_value_t = 1.0)]
        rating_span: f64,
        /// Matrix CSV path; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Error> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let mut cfg = RunConfig::read(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let dir = out
                .or_else(|| cfg.out.clone())
                .unwrap_or_else(|| PathBuf::from(format!("runs/{}-{}", cfg.algorithm.name(), cfg.seed)));
            let run = cmd_run(&cfg, &dir)?;
            let last = run.log.last().expect("log holds the initial snapshot");
            eprintln!(
                "{} iterations, {} agents, {} queries, hull area {:.6}, artifacts in {}",
                last.iteration,
                last.population_size,
                last.queries,
                last.hull_area,
                dir.display()
            );
        }
        Command::Compare { p, q, tol, seed, out } => {
            let report = cmd_compare(&read_population(&p)?, &read_population(&q)?, &EvalConfig { seed, ..Default::default() }, tol)?;
            match out {
                Some(path) => std::fs::write(path, serde_json::to_string_pretty(&report)? + "\n")?,
                None => print_json(&report)?,
            }
        }
        Command::Analyze { input, embedding, tol, seed, out } => {
            let a = load_matrix(&input, &EvalConfig { seed, ..Default::default() }, tol)?;
            print_json(&cmd_analyze(&a, embedding, tol, out.as_deref())?)?;
        }
        Command::Synth {
            kind,
            n,
            sigma,
            seed,
            rating_span,
            out,
        } => {
            let spec = SynthSpec {
                kind,
                n,
                sigma,
                seed,
                rating_span,
            };
            let (a, report) = cmd_synth(&spec, out.as_deref())?;
            if out.is_none() {
                a.write_csv(std::io::stdout().lock())?;
            }
            eprintln!("transitive norm {:.6}, cyclic norm {:.6}", report.transitive_norm, report.cyclic_norm);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        // output piped into a reader that stopped early
        Err(e) if e.is_broken_pipe() => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
