use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use nlsctl_cli::{load_config, run, write_csv, Report, RunOptions, Strictness};

#[derive(Parser)]
#[command(name = "nlsctl", version, about = "Small-time control experiments for the nonlinear Schrodinger equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Conjugated translations against their derivative limit.
    ConjugationLimit(Args),
    /// Short strong pulses against the exact impulse maps.
    ImpulseLimit(Args),
    /// Compile and simulate schedules for a target phase along a refinement ladder.
    Steer(Args),
    /// Move the local energy of a cut-off plane wave.
    EnergyShift(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output CSV; defaults to the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write trajectory snapshots next to the output.
    #[arg(long)]
    snapshots: bool,
    /// Accept an error column when its last entry is below a quarter of the first.
    #[arg(long)]
    no_strict: bool,
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn report_failures(report: &Report) {
    for check in report.checks.iter().filter(|c| !c.passed) {
        eprintln!("check failed: column `{}` does not decrease", check.column);
        eprintln!("  {}", report.table.header.join(","));
        for &i in &check.offending {
            let row: Vec<String> = report.table.rows[i].iter().map(|c| c.render()).collect();
            eprintln!("  {}", row.join(","));
        }
    }
}

fn execute(name: &str, args: &Args) -> Result<bool> {
    let config = load_config(&args.config).with_context(|| format!("loading {}", args.config.display()))?;
    if config.experiment.name() != name {
        bail!("config describes a {} experiment, not {name}", config.experiment.name());
    }
    let out = match (&args.out, &config.output) {
        (Some(p), _) | (None, Some(p)) => p.clone(),
        (None, None) => bail!("no output path: pass --out or set `output` in the config"),
    };
    let opts = RunOptions {
        snapshots: args.snapshots,
        strictness: if args.no_strict { Strictness::Relaxed } else { Strictness::Strict },
    };
    let report = run(&config, &opts)?;
    write_csv(&report.table, &out)?;
    if let Some(snaps) = &report.snapshots {
        write_csv(snaps, &sibling(&out, "snapshots.csv"))?;
    }
    if let Some(schedule) = &report.schedule {
        let path = sibling(&out, "schedule.json");
        std::fs::write(&path, schedule.to_json_pretty()).with_context(|| format!("writing {}", path.display()))?;
    }
    report_failures(&report);
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::ConjugationLimit(a) => ("conjugation-limit", a),
        Command::ImpulseLimit(a) => ("impulse-limit", a),
        Command::Steer(a) => ("steer", a),
        Command::EnergyShift(a) => ("energy-shift", a),
    };
    match execute(name, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
