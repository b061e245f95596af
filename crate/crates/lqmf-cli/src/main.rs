//! Config-driven experiment runner.
//!
//! `lqmf <mode> --config <path>... [--out <dir>] [--seed <u64>]
//!       [--jobs <n>] [--schedule fixed|accuracy] [--backtracking]`
//!
//! Each config produces `<out>/trace.csv` and `<out>/summary.json`.
//! Exit codes: 0 converged / all checks passed, 2 completed without
//! meeting the convergence criteria, 1 error.

mod config;
mod output;
mod runner;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};

use config::{load_config, Mode};
use runner::{run, RunOverrides, ScheduleChoice};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CliMode {
    Lqr,
    Drifted,
    Mfc,
    Mfg,
    Validate,
    Check,
}

impl From<CliMode> for Mode {
    fn from(m: CliMode) -> Self {
        match m {
            CliMode::Lqr => Mode::Lqr,
            CliMode::Drifted => Mode::Drifted,
            CliMode::Mfc => Mode::Mfc,
            CliMode::Mfg => Mode::Mfg,
            CliMode::Validate => Mode::Validate,
            CliMode::Check => Mode::Check,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CliSchedule {
    /// Fixed inner-iteration count per outer round.
    Fixed,
    /// Derive inner iterations from the accuracy schedule (needs
    /// `eps` in the config).
    Accuracy,
}

#[derive(Debug, Parser)]
#[command(name = "lqmf", about = "Continuous-time linear-quadratic control experiments")]
struct Cli {
    /// Experiment mode; must match the config's `mode` field.
    #[arg(value_enum)]
    mode: CliMode,

    /// Config file(s); several configs fan out across workers.
    #[arg(long, required = true, num_args = 1..)]
    config: Vec<PathBuf>,

    /// Output directory; overrides the config's `output_path`. With
    /// several configs each lands in `<out>/<config-stem>/`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Simulation seed override (validate mode).
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads for several configs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,

    /// Inner-iteration schedule for mfg mode.
    #[arg(long, value_enum, default_value_t = CliSchedule::Fixed)]
    schedule: CliSchedule,

    /// Halve destabilizing or non-decreasing steps instead of aborting.
    #[arg(long)]
    backtracking: bool,
}

fn execute_one(cli: &Cli, path: &Path, multi: bool) -> i32 {
    let started = Instant::now();
    let cfg = match load_config(path) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return 1;
        }
    };
    // validate and check run on top of any compatible config; the
    // remaining modes must match the config's own mode field
    let expected: Mode = cli.mode.into();
    if !matches!(expected, Mode::Validate | Mode::Check) && cfg.mode != expected {
        eprintln!(
            "{}: mode mismatch: command says `{expected}`, config says `{}`",
            path.display(),
            cfg.mode
        );
        return 1;
    }

    let out_dir = match (&cli.out, multi) {
        (Some(out), true) => {
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
            out.join(stem)
        }
        (Some(out), false) => out.clone(),
        (None, _) => PathBuf::from(&cfg.output_path),
    };

    let overrides = RunOverrides {
        schedule: match cli.schedule {
            CliSchedule::Fixed => ScheduleChoice::Fixed,
            CliSchedule::Accuracy => ScheduleChoice::Accuracy,
        },
        backtracking: cli.backtracking,
        seed: cli.seed,
    };

    match run(&cfg, expected, &out_dir, &overrides) {
        Ok(code) => {
            println!(
                "{}: {} in {:.3}s -> {}",
                path.display(),
                if code == 0 { "converged" } else { "completed without convergence" },
                started.elapsed().as_secs_f64(),
                out_dir.display()
            );
            code
        }
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            1
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let multi = cli.config.len() > 1;

    let codes: Vec<i32> = if cli.jobs <= 1 || !multi {
        cli.config.iter().map(|p| execute_one(&cli, p, multi)).collect()
    } else {
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for chunk in cli.config.chunks(cli.config.len().div_ceil(cli.jobs)) {
                handles.push(scope.spawn(|| {
                    chunk.iter().map(|p| execute_one(&cli, p, multi)).collect::<Vec<i32>>()
                }));
            }
            handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
        })
    };

    if codes.contains(&1) {
        ExitCode::from(1)
    } else if codes.contains(&2) {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}
