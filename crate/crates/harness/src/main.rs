use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use skm_core::processes::SamplingStrategy;
use skm_harness::config::{keys_help, parse_strategies, ExperimentConfig, FlatConfig};
use skm_harness::experiment::{
    build_operator, prepare_replication, run_experiment, run_strategy, write_experiment,
};
use skm_harness::{coverage, report, HarnessError};

#[derive(Parser, Debug)]
#[command(name = "skm", version, about = "Stochastic KM splitting on dependent data", after_long_help = keys_help())]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Sampling strategy (SP, SP-m, MR-s); repeat to select several.
    #[arg(long, global = true, value_name = "NAME")]
    strategy: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write training trajectories as CSV, one file per strategy.
    Simulate,
    /// One run of the configured algorithm on replication 0.
    Solve,
    /// Evaluate the closed-form guarantees for the configured run.
    Bounds,
    /// Compare sampling strategies over all replications.
    Experiment,
    /// Monte-Carlo check of the out-of-sample guarantee.
    Coverage,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let flat = match &cli.config {
        Some(p) => FlatConfig::load(p)?,
        None => FlatConfig::default(),
    };
    let mut cfg = ExperimentConfig::from_flat(&flat)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output = o.clone();
    }
    if !cli.strategy.is_empty() {
        cfg.strategies = parse_strategies(&cli.strategy)?;
    }
    Ok(cfg)
}

fn write(path: &Path, body: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, body)?;
    Ok(())
}

fn first_strategy(cfg: &ExperimentConfig) -> SamplingStrategy {
    cfg.strategies[0]
}

fn execute(cli: &Cli) -> Result<(), HarnessError> {
    let cfg = load(cli)?;
    let out = &cfg.output;
    match cli.command {
        Command::Simulate => {
            let length = cfg.simulate_length.unwrap_or(cfg.budget);
            for &s in &cfg.strategies {
                let set = report::simulate(&cfg, s, length)?;
                let path = out.join(format!("trajectory_{s}.csv"));
                write(&path, &report::trajectory_csv(&set))?;
                println!(
                    "{s}: {} samples, {} raw draws -> {}",
                    set.len(),
                    set.raw_draws,
                    path.display()
                );
            }
        }
        Command::Solve => {
            let s = first_strategy(&cfg);
            let op = build_operator(&cfg)?;
            let rep = prepare_replication(&cfg, 0)?;
            let run = run_strategy(&cfg, &op, &rep, s)?;
            let stem = out.join(run.file_stem());
            write(&stem.with_extension("csv"), &run.record.to_csv())?;
            write(
                &stem.with_extension("status"),
                &format!("{}\n", run.record.status_line()),
            )?;
            println!("{}", run.record.status_line());
            println!("{}", skm_harness::experiment::SUMMARY_HEADER);
            println!("{}", run.summary_line());
        }
        Command::Bounds => {
            let report = report::bounds_report(&cfg, first_strategy(&cfg))?;
            let csv = report.to_csv();
            write(&out.join("bounds.csv"), &csv)?;
            print!("{}", report.to_text());
            println!();
            print!("{csv}");
        }
        Command::Experiment => {
            let result = run_experiment(&cfg)?;
            let written = write_experiment(&result, out)?;
            let failed = result
                .runs
                .iter()
                .filter(|r| matches!(r.record.status, skm_core::engine::RunStatus::Failed { .. }))
                .count();
            print!("{}", result.summary_csv());
            eprintln!("wrote {} files to {}", written.len(), out.display());
            if failed > 0 {
                eprintln!("{failed} run(s) failed; see the .status files");
            }
        }
        Command::Coverage => {
            let report = coverage::coverage_study(&cfg)?;
            write(&out.join("coverage.csv"), &report.to_csv())?;
            println!("{}", report.summary());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
