use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use eulerml::job::{parse_job, JobSpec, Mode};
use eulerml::report::{plan, render_table, run};
use eulerml::tracker::StartStrategy;
use eulerml::Error;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    TotalDegree,
    TwoHomogeneous,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Direct,
    Batch,
}

/// Compute removal ML degrees and the ML obstruction function of a very
/// affine variety at the points listed in a job file.
#[derive(Debug, Parser)]
#[command(name = "eulerml", version)]
struct Cli {
    /// Job description (JSON).
    job: PathBuf,

    #[arg(long)]
    seed: Option<u64>,

    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,

    #[arg(long, value_enum)]
    mode: Option<ModeArg>,

    /// Independent re-draws confirming every count.
    #[arg(long, value_name = "N")]
    repeat_checks: Option<u32>,

    /// Slice the variety with d and d+1 general hyperplanes first.
    #[arg(long)]
    verify_dimension: bool,

    /// Abort if any start system has more than N paths.
    #[arg(long, value_name = "N")]
    max_paths: Option<u64>,

    /// Print the r_k table instead of JSON on standard output.
    #[arg(long)]
    pretty: bool,

    /// Record wall-clock time per slice index in the report.
    #[arg(long)]
    timings: bool,

    /// Only report the start-system path counts after the budget check.
    #[arg(long)]
    plan: bool,

    #[arg(long)]
    tol_newton: Option<f64>,
    #[arg(long)]
    tol_track: Option<f64>,
    #[arg(long)]
    tol_residual: Option<f64>,
    #[arg(long)]
    tol_dedup: Option<f64>,
    #[arg(long)]
    tol_torus: Option<f64>,
    #[arg(long)]
    tol_rank: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    max_newton_iters: Option<usize>,
}

impl Cli {
    fn apply(&self, job: &mut JobSpec) -> Result<(), Error> {
        if let Some(seed) = self.seed {
            job.seed = seed;
        }
        if let Some(s) = self.strategy {
            job.start_strategy = match s {
                StrategyArg::TotalDegree => StartStrategy::TotalDegree,
                StrategyArg::TwoHomogeneous => StartStrategy::TwoHomogeneous,
            };
        }
        if let Some(m) = self.mode {
            job.mode = match m {
                ModeArg::Direct => Mode::Direct,
                ModeArg::Batch => Mode::ParameterHomotopy,
            };
        }
        if let Some(n) = self.repeat_checks {
            job.repeat_checks = n;
        }
        job.verify_dimension |= self.verify_dimension;
        if let Some(n) = self.max_paths {
            job.max_paths = Some(n as u128);
        }
        let t = &mut job.tolerances;
        let overrides = [
            (self.tol_newton, &mut t.tol_newton),
            (self.tol_track, &mut t.tol_track),
            (self.tol_residual, &mut t.tol_residual),
            (self.tol_dedup, &mut t.tol_dedup),
            (self.tol_torus, &mut t.tol_torus),
            (self.tol_rank, &mut t.tol_rank),
        ];
        for (flag, slot) in overrides {
            if let Some(v) = flag {
                *slot = v;
            }
        }
        if let Some(n) = self.max_steps {
            t.max_steps = n;
        }
        if let Some(n) = self.max_newton_iters {
            t.max_newton_iters = n;
        }
        t.validate()
    }
}

fn emit(cli: &Cli, json: &str, table: Option<String>) -> Result<(), Error> {
    match &cli.out {
        Some(path) => std::fs::write(path, format!("{json}\n"))?,
        None if table.is_none() => println!("{json}"),
        None => {}
    }
    if let Some(t) = table {
        print!("{t}");
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<(), Error> {
    let text = std::fs::read_to_string(&cli.job)?;
    let mut job = parse_job(&text)?;
    cli.apply(&mut job)?;
    if cli.plan {
        let counts = plan(&job)?;
        let json = serde_json::json!({ "path_counts": counts, "start_strategy": job.start_strategy });
        return emit(cli, &json.to_string(), None);
    }
    let report = run(&job, cli.timings)?;
    let json = serde_json::to_string(&report).expect("report serializes");
    emit(cli, &json, cli.pretty.then(|| render_table(&report)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
