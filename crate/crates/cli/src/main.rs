//! `ccid`: coordinated content injection detection from the command line.
//!
//! Exit status is 0 on success, 2 for usage errors (bad flags, invalid
//! configuration) and 1 for everything else, including missing inputs.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::*;

/// Marks an error as the caller's fault; reported with exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(name = "ccid", version, about = "Detect coordinated content injection in a tweet corpus")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// More log output; repeat for debug messages.
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Only log errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Find copy events in a corpus.
    Detect(DetectCmd),
    /// Run the detector at several similarity thresholds.
    SweepJaccard(SweepJaccardCmd),
    /// Run the detector at several window lengths.
    SweepWindow(SweepWindowCmd),
    /// Build per-period copy graphs from detected events.
    Graph(GraphCmd),
    /// Apply the copy-percentage and activity filter to copy graphs.
    Filter(FilterCmd),
    /// Merge filtered graphs and find botnet communities.
    Communities(CommunitiesCmd),
    /// Track communities across periods.
    Evolve(EvolveCmd),
    /// Cluster interaction layers and place bots among the clusters.
    Layers(LayersCmd),
    /// Check bot hashtags against trending topics.
    Trends(TrendsCmd),
    /// Compute account features and compare bots with the rest.
    Features(FeaturesCmd),
    /// Generate a synthetic scenario with planted botnets.
    Synth(SynthCmd),
    /// Convert a copy graph between formats.
    Export(ExportCmd),
    /// Detect, build graphs, filter, find communities and track them in one run.
    Pipeline(PipelineCmd),
}

fn run(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Detect(c) => c.run(),
        Command::SweepJaccard(c) => c.run(),
        Command::SweepWindow(c) => c.run(),
        Command::Graph(c) => c.run(),
        Command::Filter(c) => c.run(),
        Command::Communities(c) => c.run(),
        Command::Evolve(c) => c.run(),
        Command::Layers(c) => c.run(),
        Command::Trends(c) => c.run(),
        Command::Features(c) => c.run(),
        Command::Synth(c) => c.run(),
        Command::Export(c) => c.run(),
        Command::Pipeline(c) => c.run(),
    }
}

fn exit_status(err: &anyhow::Error) -> u8 {
    let usage = err.chain().any(|e| {
        e.is::<UsageError>() || matches!(e.downcast_ref::<ccid_core::Error>(), Some(ccid_core::Error::InvalidArgument(_)))
    });
    if usage {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_status(&e))
        }
    }
}
