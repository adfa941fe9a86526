mod commands;
mod config;
mod failure;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Overrides, RunConfig};
use failure::Failure;

/// Scattering data, bound states and soliton trains of block potentials.
#[derive(Parser)]
#[command(name = "kdv-ist", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reflection and transmission on a real k grid.
    Scatter(Run),
    /// Bound states by every method, with norming constants.
    Spectrum(Run),
    /// Soliton-train solutions at the configured times.
    Solve(Run),
    /// Haar coefficients and compression of the profile.
    Haar(Run),
    /// Library results against the independent oracles.
    Compare(Run),
}

#[derive(Args)]
struct Run {
    /// TOML or JSON run configuration.
    #[arg(short, long)]
    config: PathBuf,
    #[arg(long)]
    n_blocks: Option<usize>,
    /// Block width; replaces n_blocks.
    #[arg(long)]
    h: Option<f64>,
    /// midpoint or cell_average.
    #[arg(long)]
    rule: Option<String>,
    /// invR, invB or qzero.
    #[arg(long)]
    bound_method: Option<String>,
    /// residue or ab.
    #[arg(long)]
    norming_method: Option<String>,
    #[arg(long)]
    eta: Option<f64>,
    /// Comma-separated times.
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    /// Support of a sech2 profile, as `left,right`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    domain: Option<Vec<f64>>,
    #[arg(short, long)]
    outputs: Option<PathBuf>,
}

impl Run {
    fn load(&self) -> Result<RunConfig, Failure> {
        let domain = match self.domain.as_deref() {
            None => None,
            Some(&[lo, hi]) => Some([lo, hi]),
            Some(_) => return Err(Failure::invalid("--domain takes two values, left,right")),
        };
        let mut cfg = RunConfig::load(&self.config)?;
        cfg.apply(&Overrides {
            n_blocks: self.n_blocks,
            h: self.h,
            rule: self.rule.clone(),
            bound_method: self.bound_method.clone(),
            norming_method: self.norming_method.clone(),
            eta: self.eta,
            times: self.times.clone(),
            domain,
            outputs: self.outputs.clone(),
        });
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, Failure> {
    let (run, command): (&Run, fn(&RunConfig) -> Result<commands::Outcome, Failure>) = match &cli.command {
        Command::Scatter(r) => (r, commands::scatter),
        Command::Spectrum(r) => (r, commands::spectrum),
        Command::Solve(r) => (r, commands::solve),
        Command::Haar(r) => (r, commands::haar),
        Command::Compare(r) => (r, commands::compare),
    };
    let cfg = run.load()?;
    command(&cfg)?.into_result()
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("kdv-ist: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
