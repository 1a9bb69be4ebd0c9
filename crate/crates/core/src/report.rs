//! Running a job end to end and the JSON report it produces.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::job::{JobSpec, Mode, ToleranceSet};
use crate::mldeg::{path_counts, verify_dimension, FilterTally, PathStats, SolveOptions};
use crate::obstruction::{
    batch_obstruction, batch_scale, generic_base_point, removal_profile, ObstructionReport,
};
use crate::rng::substream;
use crate::tracker::StartStrategy;

/// Tag of the random stream used for batch runs; direct runs use the point
/// index, so each point's result is independent of the others.
const BATCH_STREAM: u64 = u64::MAX;
const DIMENSION_STREAM: u64 = u64::MAX - 1;

#[derive(Clone, Debug, Serialize)]
pub struct JobEcho {
    pub variables: Vec<String>,
    pub equations: Vec<String>,
    pub dimension: usize,
    pub mode: Mode,
    pub start_strategy: StartStrategy,
    pub tolerances: ToleranceSet,
    pub repeat_checks: u32,
    pub verify_dimension: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_paths: Option<u128>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PointDiagnostics {
    pub paths_tracked: u64,
    pub converged: u64,
    pub diverged: u64,
    pub singular: u64,
    pub truncated: u64,
    pub filtered: FilterTally,
}

#[derive(Clone, Debug, Serialize)]
pub struct PointResult {
    pub label: String,
    pub r: Vec<usize>,
    pub ml: i64,
    pub diagnostics: PointDiagnostics,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub job: JobEcho,
    /// Start-system path count for each `k`.
    pub path_counts: Vec<u128>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    pub results: Vec<PointResult>,
    pub paths: PathStats,
    pub timings_ms: BTreeMap<String, u64>,
    pub seed: u64,
    pub version: String,
}

impl Error {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Truncated { .. } | Error::Numeric(_) => 2,
            Error::Genericity { .. } => 3,
            Error::PathBudget { .. } => 4,
            _ => 1,
        }
    }
}

impl From<&ObstructionReport> for PointResult {
    fn from(rep: &ObstructionReport) -> Self {
        let p = &rep.diagnostics.paths;
        PointResult {
            label: rep.label.clone(),
            r: rep.profile.r.clone(),
            ml: rep.ml_value,
            diagnostics: PointDiagnostics {
                paths_tracked: p.paths_tracked,
                converged: p.converged,
                diverged: p.diverged,
                singular: p.singular,
                truncated: p.truncated,
                filtered: rep.diagnostics.filtered.clone(),
            },
        }
    }
}

/// Checks every start system against the path budget before any tracking.
pub fn plan(job: &JobSpec) -> Result<Vec<u128>> {
    let counts = path_counts(&job.system, job.dimension_d, job.start_strategy)?;
    if let (Some(budget), Some(&worst)) = (job.max_paths, counts.iter().max()) {
        if worst > budget {
            return Err(Error::PathBudget {
                paths: worst,
                budget,
            });
        }
    }
    Ok(counts)
}

/// Runs every point of the job. Timings are recorded only when asked for,
/// so that reports are reproducible byte for byte by default.
pub fn run(job: &JobSpec, timings: bool) -> Result<RunReport> {
    let counts = plan(job)?;
    let opts = SolveOptions::from(job);
    let f = &job.system;
    let d = job.dimension_d;

    let degree = if job.verify_dimension {
        let mut rng = substream(job.seed, &[DIMENSION_STREAM]);
        Some(verify_dimension(f, d, &opts, &mut rng)?)
    } else {
        None
    };

    let reports: Vec<ObstructionReport> = match job.mode {
        Mode::Direct => job
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut rng = substream(job.seed, &[i as u64]);
                let profile = removal_profile(f, d, &p.coordinates, &p.label, &opts, &mut rng)?;
                ObstructionReport::from_profile(profile, d)
            })
            .collect::<Result<_>>()?,
        Mode::ParameterHomotopy => {
            let mut rng = substream(job.seed, &[BATCH_STREAM]);
            let scale = batch_scale(f.nvars(), &job.points);
            let base = generic_base_point(f, job.base_radius, &scale, &opts, &mut rng)?;
            batch_obstruction(f, d, &base, &job.points, &opts, &mut rng)?
        }
    };

    let mut paths = PathStats::default();
    let mut timings_ms = BTreeMap::new();
    for rep in &reports {
        paths.absorb(&rep.diagnostics.paths);
        if timings {
            for set in &rep.profile.sets {
                *timings_ms.entry(format!("k{}", set.k)).or_insert(0) +=
                    set.elapsed.as_millis() as u64;
            }
        }
    }

    Ok(RunReport {
        job: JobEcho {
            variables: job.variables.clone(),
            equations: job.equations.clone(),
            dimension: d,
            mode: job.mode,
            start_strategy: job.start_strategy,
            tolerances: job.tolerances.clone(),
            repeat_checks: job.repeat_checks,
            verify_dimension: job.verify_dimension,
            max_paths: job.max_paths,
        },
        path_counts: counts,
        degree,
        results: reports.iter().map(PointResult::from).collect(),
        paths,
        timings_ms,
        seed: job.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

/// The profiles laid out as rows `r_k(P,X): r_0 … r_{d+1} | ML`.
pub fn render_table(report: &RunReport) -> String {
    let d = report.job.dimension;
    let label_width = report
        .results
        .iter()
        .map(|r| r.label.len())
        .max()
        .unwrap_or(0)
        .max(1);
    let head = format!("r_k({:label_width$},X):", "P");
    let mut out = String::new();
    let _ = write!(out, "{head}");
    for k in 0..=d + 1 {
        let _ = write!(out, " {:>6}", format!("k={k}"));
    }
    let _ = writeln!(out, " {:>6}", "ML");
    for r in &report.results {
        let _ = write!(out, "r_k({:label_width$},X):", r.label);
        for v in &r.r {
            let _ = write!(out, " {v:>6}");
        }
        let _ = writeln!(out, " {:>6}", r.ml);
    }
    out
}
