use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use relatime_cli::{run_scenario, CliError, ScenarioConfig, ScenarioName};

/// Relational complex-time scenario runner.
#[derive(Debug, Parser)]
#[command(name = "relatime", version)]
struct Args {
    /// JSON scenario configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario name; overrides the file.
    #[arg(long)]
    scenario: Option<ScenarioName>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    gamma_start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    gamma_stop: Option<f64>,
    #[arg(long)]
    gamma_points: Option<usize>,
    /// Only errors on stderr, no summary on stdout.
    #[arg(long)]
    quiet: bool,
}

fn load(args: &Args) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match (&args.config, args.scenario) {
        (Some(path), _) => ScenarioConfig::from_path(path)?,
        (None, Some(name)) => ScenarioConfig::default_for(name),
        (None, None) => return Err(CliError::Config("need --config or --scenario".into())),
    };
    if let Some(name) = args.scenario {
        cfg.scenario = name;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(v) = args.gamma_start {
        cfg.gamma.start = v;
    }
    if let Some(v) = args.gamma_stop {
        cfg.gamma.stop = v;
    }
    if let Some(v) = args.gamma_points {
        cfg.gamma.points = v;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = if args.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = load(&args).and_then(|cfg| run_scenario(&cfg, &args.out));
    match outcome {
        Ok(outcome) => {
            if !args.quiet {
                println!("{} ({} rows)", outcome.summary.scenario, outcome.summary.rows);
                for c in &outcome.summary.checks {
                    let verdict = if c.passed { "pass" } else { "FAIL" };
                    println!(
                        "  {verdict}  {:<32} {:.3e} (tol {:.1e})",
                        c.name, c.max_residual, c.tolerance
                    );
                }
                println!(
                    "  wrote {} and {}",
                    outcome.csv_path.display(),
                    outcome.json_path.display()
                );
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
