use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use entnet::config::ResolvedConfig;
use entnet::exec::Execution;
use entnet::report::{self, Figure, RunError, RunOptions};
use entnet::sim::TruthLevel;

/// Simulate a fully connected entanglement distribution network and run
/// coincidence and DO-QKD analysis on the selected user links.
#[derive(Debug, Parser)]
#[command(name = "entnet", version)]
struct Cli {
    /// Scenario file (TOML). Without it every parameter takes its default.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for the report bundle.
    #[arg(long, default_value = "entnet-out")]
    out: PathBuf,
    /// Master seed; overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated acquisition time in seconds; overrides `run.duration_s`.
    #[arg(long)]
    duration: Option<f64>,
    /// `default`, `all`, or a list such as `A1-A2,B3-C4`; overrides `run.links`.
    #[arg(long)]
    links: Option<String>,
    /// Figure table to write under `figures/` (repeatable).
    #[arg(long = "emit", value_parser = parse_figure)]
    emit: Vec<Figure>,
    /// Ground-truth logging: off, surviving or all; overrides `run.truth`.
    #[arg(long, value_parser = parse_truth)]
    truth: Option<TruthLevel>,
    /// Users whose raw tag streams are written under `tags/`.
    #[arg(long, value_delimiter = ',')]
    dump_tags: Vec<String>,
    /// Run on one thread.
    #[arg(long)]
    sequential: bool,
}

fn parse_figure(s: &str) -> Result<Figure, String> {
    s.parse()
}

fn parse_truth(s: &str) -> Result<TruthLevel, String> {
    match s {
        "off" => Ok(TruthLevel::Off),
        "surviving" => Ok(TruthLevel::Surviving),
        "all" => Ok(TruthLevel::All),
        _ => Err(format!("'{s}' is not one of off, surviving, all")),
    }
}

fn execute(cli: &Cli) -> Result<(), RunError> {
    let mut resolved = match &cli.config {
        Some(path) => ResolvedConfig::from_path(path)?,
        None => ResolvedConfig::default(),
    };
    if let Some(seed) = cli.seed {
        resolved.set_seed(seed);
    }
    if let Some(d) = cli.duration {
        resolved.set_duration(d)?;
    }
    if let Some(links) = &cli.links {
        resolved.set_links(links);
    }
    if let Some(truth) = cli.truth {
        resolved.set_truth(truth);
    }
    let options = RunOptions {
        execution: if cli.sequential { Execution::Sequential } else { Execution::default() },
        dump_tags: cli.dump_tags.clone(),
    };
    let bundle = report::run(&resolved, &cli.out, &options)?;
    for &figure in &cli.emit {
        let path = report::write_figure(&bundle, figure)?;
        eprintln!("wrote {}", path.display());
    }
    let s = &bundle.keyrates.summary;
    eprintln!(
        "{} links analysed in {}; mean secure rate intra {} / inter {} bps",
        bundle.metadata.link_count,
        bundle.dir.display(),
        s.secure_rate_bps.intra.map_or("-".into(), |v| format!("{v:.1}")),
        s.secure_rate_bps.inter.map_or("-".into(), |v| format!("{v:.1}")),
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
