use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};
use surface_gkp::experiments::{run, write_output};
use surface_gkp::{Command, RunConfig};

#[derive(Parser)]
#[command(name = "surface-gkp", version, about = "Monte Carlo campaigns for the surface code built from GKP qubits")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Failure rate and Pauli classes of the error-corrected CNOT (or CZ)
    #[command(after_help = "CSV columns: sigma_db, decoder, failure_rate, stderr, shots, lambda, gate, \
then p_XI .. p_YY (first letter on the control)")]
    CnotTable(Flags),
    /// Logical Z and X failure rates of the memory experiment per (d, sigma_db)
    #[command(after_help = "CSV columns: d, sigma_db, lambda, weights, decoder, logical_z_rate, \
logical_z_stderr, logical_x_rate, logical_x_stderr, shots")]
    LogicalCurve(Flags),
    /// Crossing of adjacent-distance logical-Z curves
    #[command(after_help = "CSV columns: d_small, d_large, crossing_db, bracket_lo_db, bracket_hi_db \
(`no crossing` when the curves do not cross in range)")]
    Threshold(Flags),
    /// Qubits needed for a target logical rate, standard surface code versus surface-GKP
    #[command(after_help = "CSV columns: code, sigma_db, p_gate, target, d, modes, qubits. \
Without --p-gate the gate rate is the ML CNOT failure at each --sigma-db; --d lists surface-GKP distances")]
    Overhead(Flags),
}

#[derive(clap::Args)]
struct Flags {
    /// flat `key = value` config file; flags below override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// code distances, comma separated
    #[arg(long)]
    d: Option<String>,
    /// GKP squeezing values in dB, comma separated
    #[arg(long)]
    sigma_db: Option<String>,
    /// ancilla lattice aspect ratio
    #[arg(long)]
    lambda: Option<String>,
    /// ml, closest, or both
    #[arg(long)]
    decoder: Option<String>,
    /// analog or none
    #[arg(long)]
    weights: Option<String>,
    /// cnot or cz
    #[arg(long)]
    gate: Option<String>,
    /// shot cap per point
    #[arg(long)]
    shots: Option<String>,
    /// stop a point once its relative standard error is below this (0 = never)
    #[arg(long)]
    target_rse: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// worker threads, 0 = one per core
    #[arg(long)]
    workers: Option<String>,
    /// CSV output path; metadata goes to the same path with .json
    #[arg(long)]
    out: Option<String>,
    /// physical gate failure rates, comma separated
    #[arg(long)]
    p_gate: Option<String>,
    /// target logical failure rate
    #[arg(long)]
    target: Option<String>,
    /// marginal-table cache file
    #[arg(long)]
    cache: Option<String>,
    /// print the effective config and exit
    #[arg(long)]
    print_config: bool,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, &String)> {
        [
            ("d", &self.d),
            ("sigma_db", &self.sigma_db),
            ("lambda", &self.lambda),
            ("decoder", &self.decoder),
            ("weights", &self.weights),
            ("gate", &self.gate),
            ("shots", &self.shots),
            ("target_rse", &self.target_rse),
            ("seed", &self.seed),
            ("workers", &self.workers),
            ("out", &self.out),
            ("p_gate", &self.p_gate),
            ("target", &self.target),
            ("cache", &self.cache),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k, v)))
        .collect()
    }
}

fn config(command: Command, flags: &Flags) -> anyhow::Result<RunConfig> {
    let mut cfg = match &flags.config {
        Some(p) => RunConfig::load(command, p)?,
        None => RunConfig::new(command),
    };
    // the subcommand decides what runs, whatever the file says
    cfg.command = command;
    for (k, v) in flags.pairs() {
        cfg.set(k, v).with_context(|| format!("--{}", k.replace('_', "-")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let (command, flags) = match &cli.cmd {
        Cmd::CnotTable(f) => (Command::CnotTable, f),
        Cmd::LogicalCurve(f) => (Command::LogicalCurve, f),
        Cmd::Threshold(f) => (Command::Threshold, f),
        Cmd::Overhead(f) => (Command::Overhead, f),
    };
    let cfg = config(command, flags)?;
    if flags.print_config {
        print!("{}", cfg.to_text());
        return Ok(());
    }
    let output = run(&cfg)?;
    match &cfg.out {
        Some(path) => {
            write_output(path, &output)?;
            eprintln!("wrote {}", path.display());
        }
        None => std::io::stdout().write_all(output.csv.as_bytes())?,
    }
    Ok(())
}
