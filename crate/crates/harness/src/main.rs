use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use irsguard_harness::config::SchemeSelection;
use irsguard_harness::experiment::{run_fig1, run_fig2, run_single, thread_pool, SweepOutput};
use irsguard_harness::output::emit_results;
use irsguard_harness::validation::run_validation_suite;
use irsguard_harness::{ExperimentConfig, HarnessError};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Proposed,
    Benchmark,
    Both,
}

impl From<SchemeArg> for SchemeSelection {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Proposed => SchemeSelection::Proposed,
            SchemeArg::Benchmark => SchemeSelection::Benchmark,
            SchemeArg::Both => SchemeSelection::Both,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "irsguard", version, about = "Secure IRS-assisted downlink under an active pilot attack")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo trials per sweep point.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output directory for results.csv and meta.json.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, value_enum)]
    scheme: Option<SchemeArg>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Secrecy rate against IRS size.
    Fig1,
    /// Secrecy rate against eavesdropper azimuth.
    Fig2,
    /// A single point at the configured IRS size.
    Run,
    /// Cross-module validation suite; exits nonzero on any failed check.
    Validate,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.run.master_seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.run.n_trials = trials;
    }
    if let Some(scheme) = cli.scheme {
        cfg.run.scheme = scheme.into();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report_sweep(cfg: &ExperimentConfig, sweep: &SweepOutput, cli: &Cli) -> anyhow::Result<bool> {
    let files = emit_results(cfg, sweep, &cli.out)?;
    let failed = sweep.points.iter().filter(|p| p.error.is_some()).count();
    println!("wrote {} and {}", files.csv.display(), files.meta.display());
    if failed > 0 {
        eprintln!("{failed} sweep point(s) failed; see the status column");
    }
    Ok(failed == 0)
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let cfg = load_config(cli).context("loading configuration")?;
    if let Command::Validate = cli.command {
        let report = run_validation_suite(&cfg)?;
        for c in &report.checks {
            println!(
                "{} {}: metric {:.3e} (tolerance {:.1e}) {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.metric,
                c.tolerance,
                c.detail
            );
        }
        std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
        let path = cli.out.join("validation.json");
        std::fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        return Ok(report.passed());
    }
    let pool = thread_pool(cli.jobs)?;
    let sweep = match cli.command {
        Command::Fig1 => run_fig1(&cfg, &pool)?,
        Command::Fig2 => run_fig2(&cfg, &pool)?,
        Command::Run => run_single(&cfg, &pool)?,
        Command::Validate => unreachable!(),
    };
    report_sweep(&cfg, &sweep, cli)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
