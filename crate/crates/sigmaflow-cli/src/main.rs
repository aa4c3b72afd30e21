use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use sigmaflow_cli::{execute, Kind, RunConfig, RunError};

#[derive(Parser)]
#[command(
    name = "sigmaflow",
    version,
    about = "Discrete harmonic map and sigma model experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Harmonic map heat flow
    Flow(Common),
    /// Hopf differential, Bochner identities and domain variations
    Hopf {
        #[command(flatten)]
        common: Common,
        /// Analyse this field file instead of the configured initial map
        #[arg(long = "in")]
        input: Option<PathBuf>,
    },
    /// Energy landscape over target moduli
    TeichScan(Common),
    /// Dirac spectra for the spin structures of the torus
    DiracSpectrum(Common),
    /// Coupled Dirac-harmonic flow
    DhFlow(Common),
    /// Gravitino-coupled model symmetry checks
    AdhgCheck(Common),
    /// Exact superalgebra identities
    SuperCheck {
        #[command(flatten)]
        common: Common,
        /// Extra superfunction to check, in prefix notation
        #[arg(long)]
        expr: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: `output` from the config, else ./sigmaflow-out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
}

fn threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("SIGMAFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .with_context(|| format!("SIGMAFLOW_THREADS: `{v}` is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("SIGMAFLOW_THREADS: thread pool")?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Err(e) = threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    let (kind, common, input, expr) = match cli.command {
        Command::Flow(c) => (Kind::Flow, c, None, None),
        Command::Hopf { common, input } => (Kind::Hopf, common, input, None),
        Command::TeichScan(c) => (Kind::TeichScan, c, None, None),
        Command::DiracSpectrum(c) => (Kind::DiracSpectrum, c, None, None),
        Command::DhFlow(c) => (Kind::DhFlow, c, None, None),
        Command::AdhgCheck(c) => (Kind::AdhgCheck, c, None, None),
        Command::SuperCheck { common, expr } => (Kind::SuperCheck, common, None, expr),
    };
    match run(kind, common, input, expr) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(
    kind: Kind,
    common: Common,
    input: Option<PathBuf>,
    expr: Option<String>,
) -> Result<u8, RunError> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if input.is_some() {
        cfg.hopf.input = input;
    }
    if expr.is_some() {
        cfg.superalg.expr = expr;
    }
    let dir = common
        .out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("sigmaflow-out"));
    let outcome = execute(kind, &cfg)?;
    outcome.write(&dir)?;
    println!(
        "{kind}: report written to {}",
        dir.join("report.json").display()
    );
    if !outcome.ok {
        eprintln!("{kind}: a flow did not converge or a check failed");
    }
    Ok(outcome.exit_code() as u8)
}
