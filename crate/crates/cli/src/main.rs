//! `fb`: check, invert and optimize oversampled FIR filter banks.
//!
//! Exit status: 0 on success or a positive verdict, 2 on a negative verdict
//! (`check`: not invertible, `roundtrip`: residual above threshold), 1 on
//! any error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "fb", version, about = "Inversion and localization-driven optimization of oversampled FIR filter banks")]
pub struct Cli {
    /// JSON configuration file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate an analysis bank.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Test whether an analysis bank has an FIR left inverse.
    Check {
        bank: PathBuf,
    },
    /// Compute the minimal-order pseudo-inverse synthesis bank.
    Invert(InvertArgs),
    /// Optimize the synthesis bank for time or frequency localization.
    Optimize(OptimizeArgs),
    /// Write impulse, frequency and dispersion CSV reports for a bank.
    Report(ReportArgs),
    /// Measure the reconstruction error of an analysis/synthesis pair.
    Roundtrip(RoundtripArgs),
}

#[derive(Subcommand, Debug)]
pub enum GenCommand {
    /// Modulated complex lapped transform.
    Mclt(MtclArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum WindowKind {
    Sine,
    Kaiser,
}

#[derive(Args, Debug)]
pub struct MtclArgs {
    /// Decimation factor.
    #[arg(long = "N")]
    pub n: usize,
    /// Overlap factor (filters have kN taps).
    #[arg(long)]
    pub k: usize,
    /// Redundancy k' = M/N, as a decimal or a fraction such as 7/4.
    #[arg(long, value_parser = parse_ratio)]
    pub kp: f64,
    #[arg(long, value_enum, default_value_t = WindowKind::Sine)]
    pub window: WindowKind,
    /// Kaiser shape parameter.
    #[arg(long, default_value_t = 8.0)]
    pub beta: f64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct InvertArgs {
    pub bank: PathBuf,
    /// Require a Hermitian-symmetric synthesis bank.
    #[arg(long)]
    pub hs: bool,
    /// Largest overlap factor p = p1 + p2 + 1 to try.
    #[arg(long)]
    pub p_max: Option<usize>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriterionArg {
    Time,
    Freq,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    pub bank: PathBuf,
    #[arg(long, value_enum)]
    pub criterion: Option<CriterionArg>,
    #[arg(long)]
    pub hs: bool,
    /// Dispersion exponent.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Stop once an accepted update moves C by at most this much.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Optimization order as `p1,p2` (default: one block beyond the minimal order).
    #[arg(long, value_parser = parse_order)]
    pub order: Option<(usize, usize)>,
    #[arg(long)]
    pub p_max: Option<usize>,
    /// Output bank; the history and dispersion CSVs are written next to it.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    pub bank: PathBuf,
    #[arg(long)]
    pub impulse: bool,
    #[arg(long)]
    pub freq: bool,
    #[arg(long)]
    pub dispersion: bool,
    /// Frequency grid size.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Output prefix: writes `<prefix>.impulse.csv`, `<prefix>.freq.csv`, `<prefix>.dispersion.csv`.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct RoundtripArgs {
    pub analysis: PathBuf,
    pub synthesis: PathBuf,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub len: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_ratio(s: &str) -> Result<f64, String> {
    let value = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
            let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
            a / b
        }
        None => s.trim().parse().map_err(|e| format!("{e}"))?,
    };
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(format!("expected a positive ratio, got {s}"))
    }
}

fn parse_order(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected p1,p2, got {s}"))?;
    let p1 = a.trim().parse().map_err(|e| format!("p1: {e}"))?;
    let p2 = b.trim().parse().map_err(|e| format!("p2: {e}"))?;
    Ok((p1, p2))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios_and_orders_parse() {
        assert_eq!(parse_ratio("7/4").unwrap(), 1.75);
        assert_eq!(parse_ratio("2").unwrap(), 2.0);
        assert!(parse_ratio("0").is_err());
        assert!(parse_ratio("1/x").is_err());
        assert_eq!(parse_order("3, 0").unwrap(), (3, 0));
        assert!(parse_order("3").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
