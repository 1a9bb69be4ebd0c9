//! Removal profiles `r_0..r_{d+1}` and the alternating sum
//! `ML_X(P) = Σ_k (−1)^{d−k} r_k(P, X)`, either point by point or for many
//! points at once by moving the slices from a generic base point.

use rand::Rng;
use rayon::prelude::*;

use crate::critsys::{hyperplanes_through_point, CriticalSystem, Hyperplane, MLForm};
use crate::error::{Error, Result};
use crate::job::LabeledPoint;
use crate::mldeg::{
    confirm_count, ensure_not_truncated, filter_full, relative_residual, removal_ml_degree,
    colliding, repair_collisions, solve_once, DegenerationSet, Diagnostics, FullSolve, SolveOptions,
};
use crate::poly::{PolySystem, C64};
use crate::rng::{substream, unit_circle_vec};
use crate::tracker::{track_path_capped, ParameterHomotopy, PathOutcome, PathStatus, MAX_STEP};

/// Parameter homotopies stop this far from `t = 1`; the rest is Newton.
const BATCH_T_END: f64 = 1.0 - 1e-6;
/// Attempts at drawing a base point off the variety.
const BASE_DRAWS: usize = 5;
const DETOUR_ATTEMPTS: usize = 3;

#[derive(Clone, Debug)]
pub struct RemovalProfile {
    pub label: String,
    /// `r_0, …, r_{d+1}`.
    pub r: Vec<usize>,
    pub sets: Vec<DegenerationSet>,
}

impl RemovalProfile {
    pub fn diagnostics(&self) -> Diagnostics {
        let mut total = Diagnostics::default();
        for s in &self.sets {
            total.absorb(&s.diagnostics);
        }
        total
    }
}

#[derive(Clone, Debug)]
pub struct ObstructionReport {
    pub label: String,
    pub ml_value: i64,
    pub profile: RemovalProfile,
    pub diagnostics: Diagnostics,
}

impl ObstructionReport {
    pub fn from_profile(profile: RemovalProfile, d: usize) -> Result<Self> {
        let ml_value = ml_obstruction_value(&profile.r, d)?;
        Ok(ObstructionReport {
            label: profile.label.clone(),
            ml_value,
            diagnostics: profile.diagnostics(),
            profile,
        })
    }
}

/// Hyperplanes `A_i·z = A_i·γ(t)` along `γ(t) = (1−t)·P_0 + t·Q`.
#[derive(Clone, Debug)]
pub struct MovingSliceFamily {
    /// One row per hyperplane.
    pub directions: Vec<Vec<C64>>,
    pub base: Vec<C64>,
    pub target: Vec<C64>,
}

impl MovingSliceFamily {
    pub fn gamma(&self, t: f64) -> Vec<C64> {
        self.base
            .iter()
            .zip(&self.target)
            .map(|(p, q)| p * (1.0 - t) + q * t)
            .collect()
    }

    /// Offsets `A_i·γ(t)` of the first `count` hyperplanes.
    pub fn offsets(&self, t: f64, count: usize) -> Vec<C64> {
        let g = self.gamma(t);
        self.directions[..count]
            .iter()
            .map(|a| a.iter().zip(&g).map(|(x, y)| x * y).sum())
            .collect()
    }

    pub fn hyperplanes(&self, t: f64) -> Vec<Hyperplane> {
        let g = self.gamma(t);
        self.directions
            .iter()
            .map(|a| Hyperplane::through(a.clone(), &g))
            .collect()
    }
}

/// `Σ_k (−1)^{d−k} r_k` for a profile of length `d + 2`.
pub fn ml_obstruction_value(r: &[usize], d: usize) -> Result<i64> {
    if r.len() != d + 2 {
        return Err(Error::Input(format!(
            "profile has {} entries, dimension {d} needs {}",
            r.len(),
            d + 2
        )));
    }
    Ok(r
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let v = v as i64;
            if (d + k).is_multiple_of(2) {
                v
            } else {
                -v
            }
        })
        .sum())
}

/// Work happens in `w = z / s`, with the defining equations normalized,
/// so that the coordinates of interest have modulus near one. The
/// logarithmic form is invariant under this change, so degeneration points
/// correspond exactly.
fn to_scaled(z: &[C64], s: &[f64]) -> Vec<C64> {
    z.iter().zip(s).map(|(v, &si)| v / si).collect()
}

fn unscale(set: &mut DegenerationSet, s: &[f64]) {
    for p in set.points.iter_mut() {
        for (v, &si) in p.iter_mut().zip(s) {
            *v *= si;
        }
    }
}

/// Coordinatewise geometric mean of the moduli of `points`, or all ones.
pub fn batch_scale(n: usize, points: &[LabeledPoint]) -> Vec<f64> {
    if points.is_empty() {
        return vec![1.0; n];
    }
    (0..n)
        .map(|i| {
            let logs: f64 = points.iter().map(|p| p.coordinates[i].norm().ln()).sum();
            (logs / points.len() as f64).exp()
        })
        .collect()
}

/// `r_0..r_{d+1}` at `p` using `d + 1` random hyperplanes through `p`.
pub fn removal_profile<R: Rng + ?Sized>(
    f: &PolySystem,
    d: usize,
    p: &[C64],
    label: &str,
    opts: &SolveOptions,
    rng: &mut R,
) -> Result<RemovalProfile> {
    if p.len() != f.nvars() {
        return Err(Error::Input(format!(
            "point `{label}` has {} coordinates, expected {}",
            p.len(),
            f.nvars()
        )));
    }
    if p.iter().any(|v| !(v.norm() > 0.0 && v.norm().is_finite())) {
        return Err(Error::Input(format!("point `{label}` is not in the torus")));
    }
    let scale: Vec<f64> = p.iter().map(|v| v.norm()).collect();
    let fw = f.rescaled(&scale);
    let pw = to_scaled(p, &scale);
    let hyperplanes = hyperplanes_through_point(&pw, d + 1, rng);
    let mut sets = (0..=d + 1)
        .map(|k| removal_ml_degree(&fw, d, &hyperplanes, k, opts, rng))
        .collect::<Result<Vec<_>>>()?;
    for set in sets.iter_mut() {
        unscale(set, &scale);
    }
    Ok(RemovalProfile {
        label: label.to_string(),
        r: sets.iter().map(|s| s.count).collect(),
        sets,
    })
}

fn max_relative_residual(f: &PolySystem, p: &[C64]) -> f64 {
    f.equations()
        .iter()
        .map(|g| relative_residual(g, p))
        .fold(0.0, f64::max)
}

/// A point with coordinates of modulus `radius·scale_i` and uniform phases
/// that is visibly off the variety.
pub fn generic_base_point<R: Rng + ?Sized>(
    f: &PolySystem,
    radius: f64,
    scale: &[f64],
    opts: &SolveOptions,
    rng: &mut R,
) -> Result<Vec<C64>> {
    let threshold = 1e3 * opts.tolerances.tol_residual;
    for _ in 0..BASE_DRAWS {
        let p: Vec<C64> = unit_circle_vec(rng, f.nvars())
            .into_iter()
            .zip(scale)
            .map(|(z, &s)| z * (radius * s))
            .collect();
        if max_relative_residual(f, &p) > threshold {
            return Ok(p);
        }
    }
    Err(Error::Numeric(format!(
        "{BASE_DRAWS} base point draws all landed on the variety"
    )))
}

/// Continues the solutions of `base` from the slices through `P_0` to
/// those through `q`, then filters them at `q`.
fn continue_to(
    f: &PolySystem,
    cs: &CriticalSystem,
    base: &FullSolve,
    family: &MovingSliceFamily,
    opts: &SolveOptions,
    detour_seed: u64,
) -> Result<DegenerationSet> {
    let clock = std::time::Instant::now();
    let k = cs.k();
    let from = cs.params();
    let to = family.offsets(1.0, k);
    let reach = from
        .iter()
        .zip(&to)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let tol = &opts.tolerances;
    // Every path must follow the same curve in parameter space, otherwise
    // the endpoints are no longer a bijective image of the base solutions.
    // A failure before the end or two paths meeting means the curve passed
    // close to a degenerate parameter, so all paths are redone along a bent
    // curve.
    let mut best: Option<(usize, Vec<PathOutcome>)> = None;
    for attempt in 0..=DETOUR_ATTEMPTS {
        let bend = if attempt == 0 {
            Vec::new()
        } else {
            let mut r = substream(detour_seed, &[attempt as u64]);
            unit_circle_vec(&mut r, to.len())
                .into_iter()
                .map(|c| c * reach)
                .collect()
        };
        let h = ParameterHomotopy {
            map: cs,
            from: from.clone(),
            to: to.clone(),
            bend,
        };
        let track = |i: usize, max_step: f64| {
            track_path_capped(&h, &base.solutions[i], tol, BATCH_T_END, max_step)
        };
        let mut outcomes: Vec<PathOutcome> = (0..base.solutions.len())
            .into_par_iter()
            .map(|i| track(i, MAX_STEP))
            .collect();
        repair_collisions(&mut outcomes, tol.tol_dedup, track);
        let early = outcomes
            .iter()
            .filter(|o| match o.status {
                PathStatus::Truncated => true,
                PathStatus::Diverged => o.t_reached < BATCH_T_END,
                _ => false,
            })
            .count();
        let trouble = early + colliding(&outcomes, tol.tol_dedup).len();
        if best.as_ref().is_none_or(|(t, _)| trouble < *t) {
            best = Some((trouble, outcomes));
        }
        if trouble == 0 {
            break;
        }
    }
    let outcomes = best.expect("at least one attempt").1;
    ensure_not_truncated(&outcomes, k)?;
    let moved = cs.with_params(&to);
    let (sliced, removed) = moved.split_at(k - 1);
    let mut set = filter_full(
        &outcomes,
        f,
        sliced,
        removed.first(),
        k,
        cs.codim(),
        &opts.tolerances,
    )
    .set;
    set.elapsed = clock.elapsed();
    Ok(set)
}

/// Profiles at every target, obtained by parameter continuation of the
/// degeneration points at the generic base point `base`.
pub fn batch_obstruction<R: Rng + ?Sized>(
    f: &PolySystem,
    d: usize,
    base: &[C64],
    targets: &[LabeledPoint],
    opts: &SolveOptions,
    rng: &mut R,
) -> Result<Vec<ObstructionReport>> {
    let n = f.nvars();
    for t in targets {
        if t.coordinates.len() != n {
            return Err(Error::Input(format!(
                "point `{}` has {} coordinates, expected {n}",
                t.label,
                t.coordinates.len()
            )));
        }
    }
    let scale = batch_scale(n, targets);
    let fw = f.rescaled(&scale);
    let f = &fw;
    let base = &to_scaled(base, &scale)[..];
    let targets_w: Vec<LabeledPoint> = targets
        .iter()
        .map(|t| LabeledPoint {
            label: t.label.clone(),
            coordinates: to_scaled(&t.coordinates, &scale),
        })
        .collect();
    let directions: Vec<Vec<C64>> = (0..=d).map(|_| unit_circle_vec(rng, n)).collect();
    let form = MLForm::random(n, rng);
    let base_hyperplanes: Vec<Hyperplane> = directions
        .iter()
        .map(|a| Hyperplane::through(a.clone(), base))
        .collect();
    let seed: u64 = rng.gen();
    let detour_seed: u64 = rng.gen();

    let mut per_target: Vec<Vec<DegenerationSet>> = vec![Vec::new(); targets.len()];
    for k in 0..=d + 1 {
        let attempt = |draw: u32| -> Result<(CriticalSystem, FullSolve)> {
            let mut r = substream(seed, &[k as u64, draw as u64]);
            solve_once(f, d, &base_hyperplanes, k, &form, opts, &mut r)
        };
        let clock = std::time::Instant::now();
        let first = attempt(0)?;
        let (cs, mut solved) =
            confirm_count(k, first, opts.repeat_checks, |s| s.1.set.count, attempt)?;
        solved.set.elapsed = clock.elapsed();
        if k == 0 {
            for sets in per_target.iter_mut() {
                sets.push(solved.set.clone());
            }
            continue;
        }
        for (ti, (target, sets)) in targets_w.iter().zip(per_target.iter_mut()).enumerate() {
            let family = MovingSliceFamily {
                directions: directions.clone(),
                base: base.to_vec(),
                target: target.coordinates.clone(),
            };
            let detours = substream(detour_seed, &[k as u64, ti as u64]).gen();
            let mut set = continue_to(f, &cs, &solved, &family, opts, detours)?;
            // The ab initio solve is shared evenly among the targets.
            set.elapsed += solved.set.elapsed / targets.len() as u32;
            sets.push(set);
        }
    }

    targets
        .iter()
        .zip(per_target)
        .map(|(t, mut sets)| {
            for set in sets.iter_mut() {
                unscale(set, &scale);
            }
            let profile = RemovalProfile {
                label: t.label.clone(),
                r: sets.iter().map(|s| s.count).collect(),
                sets,
            };
            ObstructionReport::from_profile(profile, d)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_polynomial;

    fn system(vars: &[&str], eqs: &[&str]) -> PolySystem {
        let names: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        let polys = eqs.iter().map(|e| parse_polynomial(e, &names).unwrap()).collect();
        PolySystem::new(names.len(), polys).unwrap()
    }

    fn re(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    #[test]
    fn alternating_sums() {
        assert_eq!(ml_obstruction_value(&[7, 10, 1], 1).unwrap(), 2);
        assert_eq!(ml_obstruction_value(&[3, 10, 9, 1], 2).unwrap(), 1);
        assert_eq!(ml_obstruction_value(&[1, 0], 0).unwrap(), 1);
        assert_eq!(ml_obstruction_value(&[12, 42, 48, 21, 3], 3).unwrap(), 0);
        assert!(ml_obstruction_value(&[1, 2], 1).is_err());
    }

    #[test]
    fn line_profile() {
        let f = system(&["x", "y"], &["x + y - 1"]);
        let opts = SolveOptions::default();
        let mut rng = substream(4, &[]);
        let on = removal_profile(&f, 1, &[re(0.25), re(0.75)], "on", &opts, &mut rng).unwrap();
        assert_eq!(on.r, vec![1, 2, 0]);
        assert_eq!(ml_obstruction_value(&on.r, 1).unwrap(), 1);
        let off = removal_profile(&f, 1, &[re(2.0), re(3.0)], "off", &opts, &mut rng).unwrap();
        assert_eq!(off.r, vec![1, 2, 1]);
        assert_eq!(ml_obstruction_value(&off.r, 1).unwrap(), 0);
    }

    #[test]
    fn batch_matches_direct_on_a_conic() {
        let f = system(&["x", "y"], &["x^2 + 2*y^2 - 3"]);
        let opts = SolveOptions::default();
        let mut rng = substream(9, &[]);
        let base = generic_base_point(&f, 1.0, &[1.0, 1.0], &opts, &mut rng).unwrap();
        let targets = vec![
            LabeledPoint {
                label: "smooth".into(),
                coordinates: vec![re(1.0), re(1.0)],
            },
            LabeledPoint {
                label: "off".into(),
                coordinates: vec![re(2.0), re(0.5)],
            },
            LabeledPoint {
                label: "base".into(),
                coordinates: base.clone(),
            },
        ];
        let reports = batch_obstruction(&f, 1, &base, &targets, &opts, &mut rng).unwrap();
        assert_eq!(reports[0].profile.r, vec![4, 6, 1]);
        assert_eq!(reports[0].ml_value, 1);
        assert_eq!(reports[1].profile.r, vec![4, 6, 2]);
        assert_eq!(reports[1].ml_value, 0);
        assert_eq!(reports[2].profile.r, vec![4, 6, 2]);
    }

    #[test]
    fn moving_family_interpolates() {
        let fam = MovingSliceFamily {
            directions: vec![vec![re(1.0), re(2.0)]],
            base: vec![re(0.0), re(1.0)],
            target: vec![re(2.0), re(3.0)],
        };
        assert_eq!(fam.offsets(0.0, 1), vec![re(2.0)]);
        assert_eq!(fam.offsets(1.0, 1), vec![re(8.0)]);
        assert_eq!(fam.hyperplanes(0.5)[0].b, re(5.0));
    }
}
