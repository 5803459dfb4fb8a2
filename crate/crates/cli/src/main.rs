use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use mirage_core::harness::{self, ConfigError, HarnessError, RunConfig};
use mirage_core::metrics::{render_table, MetricReport, TableRow};
use mirage_core::script::{self, LoadError};

#[derive(Parser)]
#[command(name = "mirage", version, about = "Run and score murder-mystery games between agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a script file against the schema.
    Validate {
        #[arg(long)]
        script: PathBuf,
    },
    /// Play the games described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute a report from a transcript.
    Replay {
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long)]
        script: PathBuf,
    },
    /// Render the mean table of every report.json under a directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

/// Errors the user fixes by editing inputs exit with 1; everything else with 2.
fn is_validation(err: &anyhow::Error) -> bool {
    err.chain().any(|cause| {
        matches!(cause.downcast_ref::<LoadError>(), Some(LoadError::Schema(_) | LoadError::Format { .. }))
            || matches!(
                cause.downcast_ref::<ConfigError>(),
                Some(ConfigError::Invalid(_) | ConfigError::Format(_))
            )
            || cause.downcast_ref::<HarnessError>().is_some_and(HarnessError::is_validation)
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if is_validation(&err) { 1 } else { 2 })
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Validate { script } => validate(&script),
        Command::Run { config, seed, out } => run(&config, seed, out),
        Command::Replay { transcript, script } => replay(&transcript, &script),
        Command::Report { input } => report(&input),
    }
}

fn validate(path: &Path) -> Result<()> {
    script::load_script(path).with_context(|| format!("{} is not a valid script", path.display()))?;
    println!("OK");
    Ok(())
}

fn run(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<()> {
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(out) = out {
        config.output_dir = out;
    }
    if config.runs > 1 {
        let batch = harness::run_all(config).map_err(anyhow::Error::new)?;
        for bundle in &batch.bundles {
            println!("seed {} {} {}", bundle.seed, bundle.hash, bundle.transcript_path.display());
        }
        print!("{}", render_table(std::slice::from_ref(&batch.row)));
        println!("table written to {}", batch.table_path.display());
    } else {
        let bundle = harness::run(config).map_err(anyhow::Error::new)?;
        println!("seed {} {} {}", bundle.seed, bundle.hash, bundle.transcript_path.display());
        let game = &bundle.report.game;
        println!(
            "winner {:?}, accused {}, victory {:.4}",
            game.winner,
            game.final_accused.as_deref().unwrap_or("-"),
            game.victory_mrr.unwrap_or(0.0)
        );
        println!("report written to {}", bundle.report_path.display());
    }
    Ok(())
}

fn replay(transcript: &Path, script: &Path) -> Result<()> {
    let report = harness::replay(transcript, script).map_err(anyhow::Error::new)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn collect_reports(dir: &Path, found: &mut Vec<PathBuf>) -> Result<()> {
    for entry in std::fs::read_dir(dir).with_context(|| format!("cannot list {}", dir.display()))? {
        let path = entry?.path();
        if path.is_dir() {
            collect_reports(&path, found)?;
        } else if path.file_name().is_some_and(|n| n == "report.json") {
            found.push(path);
        }
    }
    Ok(())
}

fn report(dir: &Path) -> Result<()> {
    let mut paths = Vec::new();
    collect_reports(dir, &mut paths)?;
    anyhow::ensure!(!paths.is_empty(), "no report.json under {}", dir.display());
    paths.sort();
    let mut by_script: BTreeMap<String, Vec<TableRow>> = BTreeMap::new();
    for path in paths {
        let text = std::fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
        let report: MetricReport =
            serde_json::from_str(&text).with_context(|| format!("{} is not a report", path.display()))?;
        by_script
            .entry(report.script_id.clone())
            .or_default()
            .push(report.table_row(report.script_id.clone()));
    }
    let rows: Vec<TableRow> = by_script
        .into_iter()
        .map(|(label, rows)| TableRow::mean_of(label, &rows))
        .collect();
    print!("{}", render_table(&rows));
    Ok(())
}
