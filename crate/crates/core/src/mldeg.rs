//! Counting degeneration points: one removal ML degree at a time.

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::critsys::{build_removal_system, randomize_constraints, CriticalSystem, Hyperplane, MLForm};
use crate::error::{Error, Result};
use crate::job::{JobSpec, ToleranceSet};
use crate::linalg::{inf_norm, numerical_rank};
use crate::poly::{PolySystem, C64};
use crate::rng::{substream, unit_circle, unit_circle_vec};
use crate::tracker::{
    deduplicate_ranked, make_start_system, track_path_capped, HomotopyProblem, PathOutcome,
    PathStatus, PolyMap, StartStrategy, StartSystem, TotalDegreeStart, two_homogeneous_count,
    CAREFUL_MAX_STEPS, MAX_STEP,
};

/// Settings shared by every solve of a job.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub tolerances: ToleranceSet,
    pub strategy: StartStrategy,
    /// Number of independent re-draws used to confirm each count.
    pub repeat_checks: u32,
    pub max_paths: Option<u128>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tolerances: ToleranceSet::default(),
            strategy: StartStrategy::TwoHomogeneous,
            repeat_checks: 0,
            max_paths: None,
        }
    }
}

impl From<&JobSpec> for SolveOptions {
    fn from(job: &JobSpec) -> Self {
        SolveOptions {
            tolerances: job.tolerances.clone(),
            strategy: job.start_strategy,
            repeat_checks: job.repeat_checks,
            max_paths: job.max_paths,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PathStats {
    pub paths_tracked: u64,
    pub converged: u64,
    pub diverged: u64,
    pub singular: u64,
    pub truncated: u64,
}

impl PathStats {
    fn record(&mut self, status: PathStatus) {
        self.paths_tracked += 1;
        match status {
            PathStatus::Converged => self.converged += 1,
            PathStatus::Diverged => self.diverged += 1,
            PathStatus::Singular => self.singular += 1,
            PathStatus::Truncated => self.truncated += 1,
        }
    }

    pub fn absorb(&mut self, other: &PathStats) {
        self.paths_tracked += other.paths_tracked;
        self.converged += other.converged;
        self.diverged += other.diverged;
        self.singular += other.singular;
        self.truncated += other.truncated;
    }

    pub fn is_conserved(&self) -> bool {
        self.converged + self.diverged + self.singular + self.truncated == self.paths_tracked
    }
}

/// Why endpoints were dropped.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FilterTally {
    pub not_converged: u64,
    pub off_torus: u64,
    pub on_removed_hyperplane: u64,
    pub residual_fail: u64,
    pub rank_fail: u64,
    pub duplicates: u64,
}

impl FilterTally {
    pub fn absorb(&mut self, other: &FilterTally) {
        self.not_converged += other.not_converged;
        self.off_torus += other.off_torus;
        self.on_removed_hyperplane += other.on_removed_hyperplane;
        self.residual_fail += other.residual_fail;
        self.rank_fail += other.rank_fail;
        self.duplicates += other.duplicates;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Diagnostics {
    pub paths: PathStats,
    pub filtered: FilterTally,
}

impl Diagnostics {
    pub fn absorb(&mut self, other: &Diagnostics) {
        self.paths.absorb(&other.paths);
        self.filtered.absorb(&other.filtered);
    }
}

#[derive(Clone, Debug)]
pub struct DegenerationSet {
    pub k: usize,
    /// Torus coordinates of the degeneration points, sorted.
    pub points: Vec<Vec<C64>>,
    pub count: usize,
    pub diagnostics: Diagnostics,
    /// Wall-clock time spent producing this set.
    pub elapsed: Duration,
}

/// A filtered solve that still remembers the multipliers, as needed to
/// continue the solutions along a parameter homotopy.
pub(crate) struct FullSolve {
    pub set: DegenerationSet,
    pub solutions: Vec<Vec<C64>>,
}

/// `|g(z)| / max(1, Σ|c_α z^α|)`.
pub(crate) fn relative_residual(p: &crate::poly::Polynomial, z: &[C64]) -> f64 {
    p.eval_unchecked(z).norm() / p.abs_eval(z).max(1.0)
}

fn hyperplane_residual(h: &Hyperplane, z: &[C64]) -> f64 {
    let scale = h.a.iter().zip(z).map(|(a, x)| (a * x).norm()).sum::<f64>() + h.b.norm();
    h.value(z).norm() / scale.max(1.0)
}

/// Filters (1)–(5) followed by deduplication on `z`. Returns the kept
/// indices into `outcomes` together with the tallies.
fn filter_indices(
    outcomes: &[PathOutcome],
    f: &PolySystem,
    sliced: &[Hyperplane],
    removed: Option<&Hyperplane>,
    c: usize,
    cfg: &ToleranceSet,
) -> (Vec<usize>, FilterTally) {
    let n = f.nvars();
    let mut tally = FilterTally::default();
    let mut kept = Vec::new();
    let rows = f.len() + sliced.len();
    let mut jac = vec![C64::default(); rows * n];
    for (idx, out) in outcomes.iter().enumerate() {
        if out.status != PathStatus::Converged {
            tally.not_converged += 1;
            continue;
        }
        let z = &out.endpoint[..n];
        let scale = 1.0 + inf_norm(z);
        if z.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min) <= cfg.tol_torus * scale {
            tally.off_torus += 1;
            continue;
        }
        if let Some(h) = removed {
            if h.value(z).norm() <= cfg.tol_torus * scale {
                tally.on_removed_hyperplane += 1;
                continue;
            }
        }
        let residual = f
            .equations()
            .iter()
            .map(|p| relative_residual(p, z))
            .chain(sliced.iter().map(|h| hyperplane_residual(h, z)))
            .fold(0.0, f64::max);
        if residual.is_nan() || residual >= cfg.tol_residual {
            tally.residual_fail += 1;
            continue;
        }
        for (r, p) in f.equations().iter().enumerate() {
            p.eval_grad(z, &mut jac[r * n..(r + 1) * n]);
        }
        for (r, h) in sliced.iter().enumerate() {
            let row = f.len() + r;
            jac[row * n..(row + 1) * n].copy_from_slice(&h.a);
        }
        if numerical_rank(&jac, rows, n, z, cfg.tol_rank) != c {
            tally.rank_fail += 1;
            continue;
        }
        kept.push(idx);
    }
    let pts: Vec<Vec<C64>> = kept.iter().map(|&i| outcomes[i].endpoint[..n].to_vec()).collect();
    let res: Vec<f64> = kept.iter().map(|&i| outcomes[i].residual).collect();
    let reps = deduplicate_ranked(&pts, &res, cfg.tol_dedup);
    tally.duplicates = (kept.len() - reps.len()) as u64;
    // Map representatives back to their outcomes, in sorted order.
    let chosen = reps
        .iter()
        .map(|rep| {
            *kept
                .iter()
                .find(|&&i| outcomes[i].endpoint[..n] == rep[..])
                .expect("representative comes from the kept set")
        })
        .collect();
    (chosen, tally)
}

/// Keeps the endpoints that are degeneration points of the form on the
/// sliced variety minus the removed hyperplane.
pub fn filter_endpoints(
    outcomes: &[PathOutcome],
    f: &PolySystem,
    system: &CriticalSystem,
    cfg: &ToleranceSet,
) -> DegenerationSet {
    filter_full(outcomes, f, system.sliced(), system.removed(), system.k(), system.codim(), cfg).set
}

pub(crate) fn filter_full(
    outcomes: &[PathOutcome],
    f: &PolySystem,
    sliced: &[Hyperplane],
    removed: Option<&Hyperplane>,
    k: usize,
    c: usize,
    cfg: &ToleranceSet,
) -> FullSolve {
    let (idx, tally) = filter_indices(outcomes, f, sliced, removed, c, cfg);
    let mut paths = PathStats::default();
    for o in outcomes {
        paths.record(o.status);
    }
    let n = f.nvars();
    let points: Vec<Vec<C64>> = idx.iter().map(|&i| outcomes[i].endpoint[..n].to_vec()).collect();
    let solutions = idx.iter().map(|&i| outcomes[i].endpoint.clone()).collect();
    FullSolve {
        set: DegenerationSet {
            k,
            count: points.len(),
            points,
            diagnostics: Diagnostics {
                paths,
                filtered: tally,
            },
            elapsed: Duration::ZERO,
        },
        solutions,
    }
}

pub(crate) fn check_budget(paths: u128, budget: Option<u128>) -> Result<u64> {
    if let Some(b) = budget {
        if paths > b {
            return Err(Error::PathBudget { paths, budget: b });
        }
    }
    u64::try_from(paths).map_err(|_| Error::PathBudget {
        paths,
        budget: u64::MAX as u128,
    })
}

/// Tracks every start solution of `start` to `target`, in start order.
pub(crate) fn track_all<T: PolyMap + ?Sized>(
    start: &StartSystem,
    target: &T,
    gamma: C64,
    cfg: &ToleranceSet,
    budget: Option<u128>,
) -> Result<Vec<PathOutcome>> {
    let count = check_budget(start.path_count(), budget)?;
    let h = HomotopyProblem::new(start, target, gamma);
    let track = |i: usize, max_step: f64| match start.start_point(i as u128) {
        Some(x0) => track_path_capped(&h, &x0, cfg, 1.0, max_step),
        None => PathOutcome {
            status: PathStatus::Diverged,
            endpoint: vec![C64::default(); target.nvars()],
            residual: f64::INFINITY,
            condition_estimate: f64::INFINITY,
            steps: 0,
            t_reached: 0.0,
        },
    };
    let mut outcomes: Vec<PathOutcome> = (0..count)
        .into_par_iter()
        .map(|i| track(i as usize, MAX_STEP))
        .collect();
    repair_collisions(&mut outcomes, cfg.tol_dedup, track);
    Ok(outcomes)
}

/// Indices of converged paths whose endpoint coincides with that of another
/// converged path.
pub(crate) fn colliding(outcomes: &[PathOutcome], tol: f64) -> Vec<usize> {
    let conv: Vec<usize> = (0..outcomes.len())
        .filter(|&i| outcomes[i].status == PathStatus::Converged)
        .collect();
    let mut hit = vec![false; outcomes.len()];
    for (a, &i) in conv.iter().enumerate() {
        for &j in &conv[a + 1..] {
            let (p, q) = (&outcomes[i].endpoint, &outcomes[j].endpoint);
            let scale = 1.0 + inf_norm(p).max(inf_norm(q));
            let gap = p.iter().zip(q).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            if gap < tol * scale {
                hit[i] = true;
                hit[j] = true;
            }
        }
    }
    (0..outcomes.len()).filter(|&i| hit[i]).collect()
}

/// Two paths of a generic homotopy never share a regular endpoint, so a
/// collision means a path jumped. The paths involved are re-tracked with
/// shorter steps.
pub(crate) fn repair_collisions<F>(outcomes: &mut [PathOutcome], tol: f64, track: F)
where
    F: Fn(usize, f64) -> PathOutcome + Sync,
{
    for &max_step in &CAREFUL_MAX_STEPS {
        let hits = colliding(outcomes, tol);
        if hits.is_empty() {
            return;
        }
        let redone: Vec<PathOutcome> = hits.par_iter().map(|&i| track(i, max_step)).collect();
        for (i, o) in hits.into_iter().zip(redone) {
            outcomes[i] = o;
        }
    }
}

pub(crate) fn ensure_not_truncated(outcomes: &[PathOutcome], k: usize) -> Result<()> {
    let count = outcomes
        .iter()
        .filter(|o| o.status == PathStatus::Truncated)
        .count();
    if count > 0 {
        return Err(Error::Truncated {
            k,
            count,
            total: outcomes.len(),
        });
    }
    Ok(())
}

/// One ab initio solve with the given form; the randomization, start
/// system and `γ` come from `rng`.
pub(crate) fn solve_once<R: Rng + ?Sized>(
    f: &PolySystem,
    d: usize,
    hyperplanes: &[Hyperplane],
    k: usize,
    form: &MLForm,
    opts: &SolveOptions,
    rng: &mut R,
) -> Result<(CriticalSystem, FullSolve)> {
    let cs = build_removal_system(f, d, hyperplanes, k, form, rng)?;
    let start = make_start_system(&cs, opts.strategy, rng)?;
    let gamma = unit_circle(rng);
    let outcomes = track_all(&start, &cs, gamma, &opts.tolerances, opts.max_paths)?;
    ensure_not_truncated(&outcomes, k)?;
    let full = filter_full(
        &outcomes,
        f,
        cs.sliced(),
        cs.removed(),
        k,
        cs.codim(),
        &opts.tolerances,
    );
    Ok((cs, full))
}

/// Confirms `first` against `repeat_checks` further draws produced by
/// `redo`. A disagreement is settled by a third draw; a three-way split is
/// a genericity error.
pub(crate) fn confirm_count<T>(
    k: usize,
    first: T,
    repeat_checks: u32,
    count_of: impl Fn(&T) -> usize,
    mut redo: impl FnMut(u32) -> Result<T>,
) -> Result<T> {
    let mut best = first;
    let mut draw = 1;
    for _ in 0..repeat_checks {
        let second = redo(draw)?;
        draw += 1;
        if count_of(&second) == count_of(&best) {
            continue;
        }
        let third = redo(draw)?;
        draw += 1;
        let (a, b, c) = (count_of(&best), count_of(&second), count_of(&third));
        if c == b {
            best = second;
        } else if c != a {
            return Err(Error::Genericity {
                k,
                counts: vec![a, b, c],
            });
        }
    }
    Ok(best)
}

/// The removal ML degree `r_k` of `X = V(F)` with respect to the given
/// hyperplanes (the first `k − 1` slice, the `k`-th is removed).
pub fn removal_ml_degree<R: Rng + ?Sized>(
    f: &PolySystem,
    d: usize,
    hyperplanes: &[Hyperplane],
    k: usize,
    opts: &SolveOptions,
    rng: &mut R,
) -> Result<DegenerationSet> {
    let clock = Instant::now();
    let base: u64 = rng.gen();
    let attempt = |draw: u32| -> Result<DegenerationSet> {
        let mut r = substream(base, &[k as u64, draw as u64]);
        let form = MLForm::random(f.nvars(), &mut r);
        solve_once(f, d, hyperplanes, k, &form, opts, &mut r).map(|(_, s)| s.set)
    };
    let first = attempt(0)?;
    let mut set = confirm_count(k, first, opts.repeat_checks, |s| s.count, attempt)?;
    set.elapsed = clock.elapsed();
    Ok(set)
}

/// Start-system path counts for `k = 0..=d+1` under `strategy`, computed
/// from the shapes of the critical systems alone.
pub fn path_counts(f: &PolySystem, d: usize, strategy: StartStrategy) -> Result<Vec<u128>> {
    let n = f.nvars();
    let mut rng = substream(0, &[]);
    let hyperplanes: Vec<Hyperplane> = (0..=d)
        .map(|_| Hyperplane {
            a: unit_circle_vec(&mut rng, n),
            b: unit_circle(&mut rng),
        })
        .collect();
    let form = MLForm::random(n, &mut rng);
    (0..=d + 1)
        .map(|k| {
            let cs = build_removal_system(f, d, &hyperplanes, k, &form, &mut rng)?;
            Ok(match strategy {
                StartStrategy::TotalDegree => cs.degrees().iter().map(|&x| x as u128).product(),
                StartStrategy::TwoHomogeneous => two_homogeneous_count(cs.bidegrees(), cs.codim()),
            })
        })
        .collect()
}

/// Slices `X` with `d` and with `d + 1` random hyperplanes. The first
/// slice must consist of finitely many (and at least one) smooth torus
/// points, the second must miss `X`. Returns the number of points found in
/// the first slice, i.e. the degree of `X` when the check passes.
pub fn verify_dimension<R: Rng + ?Sized>(
    f: &PolySystem,
    d: usize,
    opts: &SolveOptions,
    rng: &mut R,
) -> Result<usize> {
    let n = f.nvars();
    if d >= n {
        return Err(Error::Dimension(format!("dimension {d} must be below {n}")));
    }
    let cfg = &opts.tolerances;
    let slice = |m: usize, rng: &mut R| -> Result<(usize, usize)> {
        let c = n - m;
        if f.len() < c {
            return Err(Error::Dimension(format!(
                "{} equations cannot cut out codimension {c}",
                f.len()
            )));
        }
        let hyps: Vec<Hyperplane> = (0..m)
            .map(|_| {
                let a = unit_circle_vec(rng, n);
                let b = unit_circle(rng);
                Hyperplane { a, b }
            })
            .collect();
        let (ghat, _) = randomize_constraints(f, c, rng)?;
        let mut eqs = ghat.equations().to_vec();
        eqs.extend(hyps.iter().map(Hyperplane::polynomial));
        let square = PolySystem::new(n, eqs)?;
        let start = StartSystem::TotalDegree(TotalDegreeStart::new(square.degrees()));
        let gamma = unit_circle(rng);
        let outcomes = track_all(&start, &square, gamma, cfg, opts.max_paths)?;
        ensure_not_truncated(&outcomes, m)?;
        let on_x = |z: &[C64]| {
            z.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min)
                > cfg.tol_torus * (1.0 + inf_norm(z))
                && f
                    .equations()
                    .iter()
                    .map(|p| relative_residual(p, z))
                    .fold(0.0, f64::max)
                    < cfg.tol_residual
        };
        let regular = outcomes
            .iter()
            .filter(|o| o.status == PathStatus::Converged && on_x(&o.endpoint))
            .count();
        let singular = outcomes
            .iter()
            .filter(|o| o.status == PathStatus::Singular && on_x(&o.endpoint))
            .count();
        Ok((regular, singular))
    };
    let (points, singular) = slice(d, rng)?;
    if points == 0 {
        return Err(Error::Dimension(format!(
            "{d} general hyperplanes miss the variety; its dimension is below {d}"
        )));
    }
    if singular > 0 {
        return Err(Error::Dimension(format!(
            "{d} general hyperplanes leave a positive-dimensional intersection"
        )));
    }
    let (extra, extra_singular) = slice(d + 1, rng)?;
    if extra + extra_singular > 0 {
        return Err(Error::Dimension(format!(
            "{} general hyperplanes still meet the variety; its dimension exceeds {d}",
            d + 1
        )));
    }
    Ok(points)
}
