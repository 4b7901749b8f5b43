use std::path::PathBuf;
use std::process::exit;

use clap::Parser;
use viscoflow_cli::app::{execute, output_dir};
use viscoflow_cli::config::{Mode, SimConfig};

/// Viscoelastic flow solver with a positivity-preserving conformation tensor.
#[derive(Parser)]
#[command(name = "viscoflow", version)]
struct Args {
    mode: Mode,
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            exit(2);
        }
    };
    let mut cfg = match SimConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            exit(2);
        }
    };
    cfg.mode = args.mode;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let threads = args.threads.unwrap_or(0);
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
    {
        eprintln!("error: thread pool: {e}");
        exit(2);
    }
    let out = output_dir(&cfg, args.out);
    if let Err(e) = execute(&cfg, &out, rayon::current_num_threads()) {
        eprintln!("error: {e}");
        exit(e.exit_code());
    }
}
