use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tapscount::harness::{self, RunConfig};
use tapscount::Result;

/// Identify the number of channel taps from pilot/received signal pairs.
#[derive(Parser)]
#[command(name = "tapscount", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `seed` and `generation.master_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Extra overrides as `dotted.key=value` (value parsed as JSON when possible).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Synthesize a labeled corpus.
    Generate,
    /// Train the classifier; writes checkpoint and per-epoch curves.
    Train,
    /// Evaluate a checkpoint on a split.
    Eval,
    /// Run the SWISS baseline on a split.
    Swiss,
    /// Run the IHT baseline on a split.
    Iht,
    /// DNN vs SWISS vs IHT on the same split.
    Compare,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut overrides = Vec::new();
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| tapscount::Error::Config(format!("override `{kv}` is not KEY=VALUE")))?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p, &overrides)?,
        None => RunConfig::from_json("{}", &overrides)?,
    };
    if let Some(s) = cli.seed {
        cfg = cfg.with_seed(s);
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    match cli.command {
        Command::Generate => {
            for p in harness::cmd_generate(&cfg)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Train => {
            let s = harness::cmd_train(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&s)?);
        }
        Command::Eval => print!("{}", harness::cmd_eval(&cfg)?.summary()),
        Command::Swiss => print!("{}", harness::cmd_swiss(&cfg)?.summary()),
        Command::Iht => print!("{}", harness::cmd_iht(&cfg)?.summary()),
        Command::Compare => print!("{}", harness::cmd_compare(&cfg)?.table()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{:?}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
