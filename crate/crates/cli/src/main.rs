use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cobadd_cli::config::ExperimentConfig;
use cobadd_cli::run::cmd_run;
use cobadd_cli::verify::{cmd_verify, failures};
use cobadd_cli::CliError;

#[derive(Parser)]
#[command(name = "cobadd", version, about = "Consensus-based dual decomposition experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Replace the instance, graph and verification seeds.
    #[arg(long, global = true)]
    seed_override: Option<u64>,

    /// Write outputs here instead of the config's output_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute every run in the config and write CSV traces plus summary.json.
    Run { config: PathBuf },
    /// Run the invariant suites and report pass/fail per check.
    Verify { config: PathBuf },
}

fn load(path: &Path, cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed_override {
        cfg.override_seed(seed);
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn real_main(cli: &Cli) -> Result<ExitCode, CliError> {
    match &cli.command {
        Command::Run { config } => {
            let cfg = load(config, cli)?;
            let summary = cmd_run(&cfg)?;
            for run in &summary.runs {
                println!(
                    "{}: final |f* − f| = {:.3e}, floor = {:.3e}, messages to 1% = {}",
                    run.name,
                    run.final_abs_error,
                    run.floor_abs_error,
                    run.messages_to_1pct.map_or("never".into(), |m| m.to_string())
                );
            }
            println!("wrote {}", cfg.output_dir.display());
            if summary.total_violations > 0 {
                eprintln!("{} bound violations (see summary.json)", summary.total_violations);
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { config } => {
            let cfg = load(config, cli)?;
            let reports = cmd_verify(&cfg)?;
            for r in &reports {
                println!("{r}");
            }
            let bad = failures(&reports);
            if bad > 0 {
                eprintln!("{bad} checks failed");
                return Ok(ExitCode::from(1));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
