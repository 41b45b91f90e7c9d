//! `protqtn`: prepare protein datasets, train quantum tensor network
//! classifiers, and inspect trained models.
//!
//! Exit codes: 0 on success, 1 on internal errors, 2 on usage or
//! configuration errors.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, configuration or input files.
    Usage(String),
    /// Failures that are not the caller's fault.
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "protqtn", version, about = "Quantum tensor network sequence classifiers")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Global {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// postselect or discard.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// ptn or ctn.
    #[arg(long, global = true)]
    pub topology: Option<String>,
    /// uniform or hierarchical.
    #[arg(long, global = true)]
    pub sharing: Option<String>,
    /// Output directory (file for `export`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Filter and label a FASTA file, split it, and write the canonical dataset.
    Prepare {
        #[arg(long)]
        fasta: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        min_len: Option<usize>,
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Train a model; writes history.csv, metrics.json and checkpoint.json.
    Train {
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// k-fold cross-validation over the whole dataset; writes kfold.json.
    Crossval,
    /// Evaluate one sequence against a checkpoint and print JSON.
    Simulate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        sequence: String,
    },
    /// Print the diagram or gate listing of a sequence's model.
    Export {
        what: Export,
        #[arg(long)]
        sequence: String,
        /// Take the model from a checkpoint instead of the configuration.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Write synthetic datasets.
    Synth {
        #[command(subcommand)]
        kind: Synth,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Export {
    Diagram,
    Circuit,
}

#[derive(Subcommand, Debug)]
pub enum Synth {
    /// Motif-detection task written as a canonical dataset file.
    Motif {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 8)]
        seq_len: usize,
        #[arg(long, default_value_t = 4)]
        vocab: usize,
        /// Two residues, e.g. `AC`.
        #[arg(long, default_value = "AC")]
        motif: String,
    },
    /// UniProt-style FASTA and location table.
    Uniprot {
        #[arg(long, default_value_t = 1500)]
        n: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
