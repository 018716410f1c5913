use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pushpull_cli::{
    load_config, run_experiment, Experiment, ExperimentConfig, HarnessError, Protocol,
};

#[derive(Parser)]
#[command(
    name = "pushpull",
    version,
    about = "Push/pull MAC coexistence simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single CFF simulation at a fixed offered load.
    Cff(Common),
    /// Single RCS simulation.
    Rcs(Common),
    /// Latency-constrained capacity frontier of the CFF frame.
    Capacity(Common),
    /// Batch run of whatever the config describes.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct Overrides {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; the sidecar goes next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    replications: Option<u32>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    jobs: Option<usize>,
    /// No progress output.
    #[arg(long)]
    quiet: bool,
}

fn configure(
    path: Option<&PathBuf>,
    expected: Option<(Protocol, Experiment)>,
    o: &Overrides,
) -> Result<ExperimentConfig, HarnessError> {
    let mut config = match (path, expected) {
        (Some(p), _) => load_config(p)?,
        (None, Some((protocol, experiment))) => ExperimentConfig::preset(protocol, experiment),
        (None, None) => unreachable!("sweep requires --config"),
    };
    if let Some((protocol, experiment)) = expected {
        if (config.protocol, config.experiment) != (protocol, experiment) {
            return Err(HarnessError::Invalid(format!(
                "config describes {} {}, not what this subcommand runs",
                config.protocol, config.experiment
            )));
        }
    }
    if let Some(seed) = o.seed {
        config.master_seed = seed;
    }
    if let Some(out) = &o.out {
        config.output = out.clone();
    }
    if o.replications.is_some() {
        config.replications = o.replications;
    }
    if o.jobs.is_some() {
        config.jobs = o.jobs;
    }
    config.resolve()
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let (config, quiet) = match &cli.command {
        Command::Cff(c) => (
            configure(
                c.config.as_ref(),
                Some((Protocol::Cff, Experiment::Simulate)),
                &c.overrides,
            )?,
            c.overrides.quiet,
        ),
        Command::Rcs(c) => (
            configure(
                c.config.as_ref(),
                Some((Protocol::Rcs, Experiment::Simulate)),
                &c.overrides,
            )?,
            c.overrides.quiet,
        ),
        Command::Capacity(c) => (
            configure(
                c.config.as_ref(),
                Some((Protocol::Cff, Experiment::Capacity)),
                &c.overrides,
            )?,
            c.overrides.quiet,
        ),
        Command::Sweep(s) => (
            configure(Some(&s.config), None, &s.overrides)?,
            s.overrides.quiet,
        ),
    };
    if !quiet {
        eprintln!(
            "running {} {}: {} rows",
            config.protocol,
            config.experiment,
            pushpull_cli::expected_rows(&config)
        );
    }
    let report = run_experiment(&config)?;
    if !quiet {
        eprintln!(
            "wrote {} ({} rows, {} without value) and {} in {:.1} s",
            report.csv_path.display(),
            report.rows,
            report.failed_rows,
            report.metadata_path.display(),
            report.wall_time_s
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
