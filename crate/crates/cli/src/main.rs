use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use halfspace_cli::{list_presets, load_spec, run_experiment, RunOptions};

#[derive(Parser)]
#[command(name = "halfspace", version, about = "Run solver and estimate experiments on the half-space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment file or a bundled experiment.
    Run {
        /// Path to an experiment file, or a bundled name (see list-presets).
        spec: String,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Overrides the experiment seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List coefficient presets and bundled experiments.
    ListPresets,
}

fn run(spec: &str, out: PathBuf, threads: Option<usize>, seed: Option<u64>) -> Result<bool> {
    if let Some(k) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    }
    let spec = load_spec(spec)?;
    let summary = run_experiment(&spec, &RunOptions { out_dir: out.clone(), seed })?;
    for c in &summary.checks {
        println!("{:<24} {}/{} {}", c.name, c.passed(), c.records.len(), if c.pass() { "PASS" } else { "FAIL" });
        for r in &c.records {
            if let halfspace_cli::Record::Failed(msg) = r {
                eprintln!("check {}: {msg}", c.name);
            }
        }
    }
    println!("{} -> {}", if summary.pass() { "PASS" } else { "FAIL" }, out.display());
    Ok(summary.pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListPresets => {
            print!("{}", list_presets());
            ExitCode::SUCCESS
        }
        Command::Run { spec, out, threads, seed } => match run(&spec, out, threads, seed) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
    }
}
