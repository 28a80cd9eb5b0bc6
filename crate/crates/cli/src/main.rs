use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use skorohod_cli::certificate::{Certificate, CommandEcho, CommandName, Options};
use skorohod_cli::commands;
use skorohod_cli::input::{self, Inputs};
use skorohod_cli::verify::verify;
use skorohod_core::transport::MassRule;
use skorohod_core::Dyadic;

/// Exact valuation-order checks, Cantor-tree realizations and quantile
/// adjoints, reported as JSON certificates.
///
/// Exit status: 0 when the property holds, 1 when it fails or is refused,
/// 2 on unreadable or invalid input.
#[derive(Parser)]
#[command(name = "skorohod", version)]
struct Cli {
    /// Write the certificate here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Pair {
    mu: PathBuf,
    nu: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Decide μ <= ν by max-flow and by upper-set enumeration.
    Order(Pair),
    /// Build a splitting plan for μ <= ν, or a min-cut refusal.
    Split(Pair),
    /// Decide μ << ν.
    Waybelow {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, default_value_t = MassRule::StrictTotal)]
        mass_rule: MassRule,
    },
    /// Realize an increasing chain as partial maps on the Cantor tree.
    Realize { chain: PathBuf },
    /// Scott-extend a partial map to all finite words.
    Extend {
        map: PathBuf,
        /// Deepest level listed in the certificate.
        #[arg(long)]
        depth: Option<u32>,
    },
    /// Distribution and quantile functions of a measure on the dyadic chain.
    Quantile {
        mu: PathBuf,
        /// Push Lebesgue measure along the quantile function and compare.
        #[arg(long)]
        check_roundtrip: bool,
        /// Compare the valuation order with the quantile order against this measure.
        #[arg(long)]
        compare: Option<PathBuf>,
        /// Grid exponent for the adjunction checks.
        #[arg(long)]
        depth: Option<u32>,
    },
    /// Finite-tail Portmanteau check of a sequence against its limit.
    Portmanteau {
        sequence: PathBuf,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        tolerance: Option<Dyadic>,
    },
    /// Words where realized sequence terms disagree with the realized limit.
    Converge {
        sequence: PathBuf,
        #[arg(long)]
        depth: Option<u32>,
        /// First term of the tail (1-based).
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        tolerance: Option<Dyadic>,
    },
    /// Full run of the Skorohod construction on a sequence document.
    SkorohodDemo {
        sequence: PathBuf,
        #[arg(long)]
        depth: Option<u32>,
    },
    /// Re-check a certificate from its embedded data.
    Verify { certificate: PathBuf },
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn load(command: Command) -> Result<(CommandEcho, Inputs), input::InputError> {
    let echo = |name, options, files: &[&PathBuf]| CommandEcho {
        name,
        options,
        files: files.iter().map(|p| display(p)).collect(),
    };
    Ok(match command {
        Command::Order(p) => (echo(CommandName::Order, Options::default(), &[&p.mu, &p.nu]), input::load_pair(&p.mu, &p.nu)?),
        Command::Split(p) => (echo(CommandName::Split, Options::default(), &[&p.mu, &p.nu]), input::load_pair(&p.mu, &p.nu)?),
        Command::Waybelow { pair, mass_rule } => (
            echo(
                CommandName::Waybelow,
                Options {
                    mass_rule: Some(mass_rule),
                    ..Options::default()
                },
                &[&pair.mu, &pair.nu],
            ),
            input::load_pair(&pair.mu, &pair.nu)?,
        ),
        Command::Realize { chain } => (echo(CommandName::Realize, Options::default(), &[&chain]), input::load_chain(&chain)?),
        Command::Extend { map, depth } => (
            echo(CommandName::Extend, Options { depth, ..Options::default() }, &[&map]),
            input::load_partial_map(&map)?,
        ),
        Command::Quantile {
            mu,
            check_roundtrip,
            compare,
            depth,
        } => {
            let mut files = vec![&mu];
            files.extend(compare.as_ref());
            (
                echo(
                    CommandName::Quantile,
                    Options {
                        depth,
                        check_roundtrip,
                        ..Options::default()
                    },
                    &files,
                ),
                input::load_chain_measure(&mu, compare.as_deref())?,
            )
        }
        Command::Portmanteau {
            sequence,
            horizon,
            tolerance,
        } => (
            echo(
                CommandName::Portmanteau,
                Options {
                    horizon,
                    tolerance,
                    ..Options::default()
                },
                &[&sequence],
            ),
            input::load_sequence(&sequence)?,
        ),
        Command::Converge {
            sequence,
            depth,
            horizon,
            tolerance,
        } => (
            echo(
                CommandName::Converge,
                Options {
                    depth,
                    horizon,
                    tolerance,
                    ..Options::default()
                },
                &[&sequence],
            ),
            input::load_sequence(&sequence)?,
        ),
        Command::SkorohodDemo { sequence, depth } => (
            echo(CommandName::SkorohodDemo, Options { depth, ..Options::default() }, &[&sequence]),
            input::load_sequence(&sequence)?,
        ),
        Command::Verify { .. } => unreachable!("verify is handled before loading"),
    })
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    if let Command::Verify { certificate } = &cli.command {
        let cert: Certificate = input::read_json(certificate)?;
        let report = verify(&cert);
        emit(&report.render(), cli.output.as_deref())?;
        return Ok(if report.verified { 0 } else { 1 });
    }
    let (echo, inputs) = load(cli.command)?;
    let cert = commands::run(echo, inputs)?;
    emit(&cert.render(), cli.output.as_deref())?;
    Ok(cert.decision.exit_code() as u8)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
