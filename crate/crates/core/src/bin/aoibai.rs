use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use aoibai::harness::{self, Overrides};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Validate,
    Oracle,
    Run,
    Experiment,
    Mixing,
    Instances,
    LowerBound,
}

/// Age-optimal best-arm identification over restless Markov edge nodes.
#[derive(Debug, Parser)]
#[command(name = "aoibai", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Config file, or `preset:<name>` (five_node, mixing, instances, lower_bound_toy).
    #[arg(long)]
    config: String,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a per-round trace (`run` only).
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for trial batches (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Perturbation size for `lower-bound`, replacing the first-order estimate.
    #[arg(long)]
    epsilon: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let ov = Overrides {
        out: cli.out.clone(),
        trace: cli.trace,
        seed: cli.seed,
        workers: cli.workers,
        epsilon: cli.epsilon,
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = harness::load_config(&cli.config).and_then(|cfg| match cli.command {
        Command::Validate => harness::cmd_validate(&cfg, &mut out).map(|ok| if ok { 0 } else { 1 }),
        Command::Oracle => harness::cmd_oracle(&cfg, &mut out).map(|_| 0),
        Command::Run => harness::cmd_run(&cfg, &ov, &mut out).map(|_| 0),
        Command::Experiment => harness::cmd_experiment(&cfg, &ov, &mut out).map(|_| 0),
        Command::Mixing => harness::cmd_mixing(&cfg, &ov, &mut out).map(|_| 0),
        Command::Instances => harness::cmd_instances(&cfg, &ov, &mut out).map(|_| 0),
        Command::LowerBound => harness::cmd_lower_bound(&cfg, &ov, &mut out).map(|_| 0),
    });
    let _ = out.flush();
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(harness::exit_code(&e) as u8)
        }
    }
}
