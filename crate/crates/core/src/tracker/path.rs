use serde::Serialize;

use crate::job::ToleranceSet;
use crate::linalg::{condition_estimate, inf_norm, lu_factor, lu_solve};
use crate::poly::C64;

use super::{AtTime, Homotopy, PolyMap};

/// Norm beyond which a path is declared to go to infinity.
const DIVERGENCE_NORM: f64 = 1e8;
/// Smallest admissible step in `t`.
const MIN_STEP: f64 = 1e-14;
const INITIAL_STEP: f64 = 0.02;
/// Longest step in `t` during normal tracking.
pub const MAX_STEP: f64 = 0.1;
/// Step caps for re-tracking paths that landed on the same endpoint.
pub const CAREFUL_MAX_STEPS: [f64; 2] = [0.01, 0.001];
/// A stall this close to the end of the path is an arrival at a singular
/// endpoint rather than a divergence.
const SINGULAR_STALL_WINDOW: f64 = 1e-8;
/// Largest accepted first corrector update, relative to the predictor move.
const PREDICTOR_TRUST: f64 = 0.1;
/// Newton updates below this multiple of `tol_newton` are too noisy to
/// measure the convergence rate.
const CONTRACTION_FLOOR: f64 = 10.0;
/// Linear convergence at this rate or slower marks a singular endpoint.
const SINGULAR_CONTRACTION: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathStatus {
    Converged,
    Diverged,
    Singular,
    Truncated,
}

#[derive(Clone, Debug)]
pub struct PathOutcome {
    pub status: PathStatus,
    pub endpoint: Vec<C64>,
    /// Relative size of the last Newton correction at the endpoint.
    pub residual: f64,
    pub condition_estimate: f64,
    pub steps: usize,
    pub t_reached: f64,
}

#[derive(Clone, Debug)]
pub struct NewtonResult {
    pub x: Vec<C64>,
    /// `‖dx‖∞ / (1 + ‖x‖∞)` of the last Newton update.
    pub residual: f64,
    pub condition_estimate: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest ratio between consecutive full Newton updates above the noise
    /// floor. Near one half for a double root, tiny for a regular one.
    pub contraction: f64,
}

/// Damped Newton iteration on a square system until the relative update
/// drops below `tol_newton` or `max_refine_iters` is exhausted. A Jacobian
/// that cannot be factored yields an infinite condition estimate.
pub fn newton_refine<M: PolyMap + ?Sized>(system: &M, x: &[C64], cfg: &ToleranceSet) -> NewtonResult {
    let n = system.nvars();
    assert_eq!(n, system.neqs(), "newton_refine needs a square system");
    let mut x = x.to_vec();
    let mut value = vec![C64::default(); n];
    let mut jac = vec![C64::default(); n * n];
    let mut trial_val = vec![C64::default(); n];
    let mut trial_jac = vec![C64::default(); n * n];
    let mut perm = vec![0; n];
    let mut dx = vec![C64::default(); n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut contraction: f64 = 0.0;
    let mut prev_full: Option<f64> = None;

    system.eval_jac(&x, &mut value, &mut jac);
    for _ in 0..cfg.max_refine_iters {
        iterations += 1;
        let mut lu = jac.clone();
        if !lu_factor(&mut lu, n, &mut perm) {
            return NewtonResult {
                x,
                residual,
                condition_estimate: f64::INFINITY,
                iterations,
                converged: false,
                contraction,
            };
        }
        let rhs: Vec<C64> = value.iter().map(|v| -v).collect();
        lu_solve(&lu, n, &perm, &rhs, &mut dx);
        let step = inf_norm(&dx) / (1.0 + inf_norm(&x));
        if !step.is_finite() {
            break;
        }
        residual = step;
        if let Some(p) = prev_full {
            if p > CONTRACTION_FLOOR * cfg.tol_newton {
                contraction = contraction.max(step / p);
            }
        }
        if step < cfg.tol_newton {
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
            system.eval_jac(&x, &mut value, &mut jac);
            converged = true;
            break;
        }
        let current = inf_norm(&value);
        let mut alpha = 1.0;
        let mut trial = x.clone();
        loop {
            for ((t, xi), d) in trial.iter_mut().zip(&x).zip(&dx) {
                *t = xi + d * alpha;
            }
            system.eval_jac(&trial, &mut trial_val, &mut trial_jac);
            let r = inf_norm(&trial_val);
            if r <= current || alpha < 1.0 / 32.0 || !r.is_finite() {
                break;
            }
            alpha *= 0.5;
        }
        prev_full = (alpha == 1.0).then_some(step);
        x = trial;
        std::mem::swap(&mut value, &mut trial_val);
        std::mem::swap(&mut jac, &mut trial_jac);
        if x.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            break;
        }
    }
    let condition = if x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        condition_estimate(&jac, n, &x)
    } else {
        f64::INFINITY
    };
    NewtonResult {
        x,
        residual,
        condition_estimate: condition,
        iterations,
        converged,
        contraction,
    }
}

struct Workspace {
    n: usize,
    value: Vec<C64>,
    jac: Vec<C64>,
    dt: Vec<C64>,
    perm: Vec<usize>,
    rhs: Vec<C64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace {
            n,
            value: vec![C64::default(); n],
            jac: vec![C64::default(); n * n],
            dt: vec![C64::default(); n],
            perm: vec![0; n],
            rhs: vec![C64::default(); n],
        }
    }

    /// `ẋ = −H_x⁻¹ H_t` at `(x, t)`.
    fn velocity<H: Homotopy + ?Sized>(&mut self, h: &H, x: &[C64], t: f64, out: &mut [C64]) -> bool {
        h.evaluate(x, t, &mut self.value, &mut self.jac, &mut self.dt);
        if !lu_factor(&mut self.jac, self.n, &mut self.perm) {
            return false;
        }
        for (r, d) in self.rhs.iter_mut().zip(&self.dt) {
            *r = -d;
        }
        lu_solve(&self.jac, self.n, &self.perm, &self.rhs, out);
        out.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    fn rk4<H: Homotopy + ?Sized>(&mut self, h: &H, x: &[C64], t: f64, step: f64) -> Option<Vec<C64>> {
        let n = self.n;
        let mut k1 = vec![C64::default(); n];
        let mut k2 = vec![C64::default(); n];
        let mut k3 = vec![C64::default(); n];
        let mut k4 = vec![C64::default(); n];
        let mut tmp = vec![C64::default(); n];
        if !self.velocity(h, x, t, &mut k1) {
            return None;
        }
        for i in 0..n {
            tmp[i] = x[i] + k1[i] * (0.5 * step);
        }
        if !self.velocity(h, &tmp, t + 0.5 * step, &mut k2) {
            return None;
        }
        for i in 0..n {
            tmp[i] = x[i] + k2[i] * (0.5 * step);
        }
        if !self.velocity(h, &tmp, t + 0.5 * step, &mut k3) {
            return None;
        }
        for i in 0..n {
            tmp[i] = x[i] + k3[i] * step;
        }
        if !self.velocity(h, &tmp, t + step, &mut k4) {
            return None;
        }
        for i in 0..n {
            tmp[i] = x[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (step / 6.0);
        }
        Some(tmp)
    }

    /// Newton on `H(·, t)`; succeeds when the update falls below
    /// `tol_track` relative to `1 + ‖x‖` while contracting. The first
    /// update must also be small next to the predictor move `pred`, which
    /// keeps a long step from landing on a neighbouring path.
    fn correct<H: Homotopy + ?Sized>(
        &mut self,
        h: &H,
        x: &mut [C64],
        t: f64,
        pred: f64,
        cfg: &ToleranceSet,
    ) -> bool {
        let n = self.n;
        let mut dx = vec![C64::default(); n];
        let mut prev = f64::INFINITY;
        for iter in 0..cfg.max_newton_iters {
            h.evaluate(x, t, &mut self.value, &mut self.jac, &mut self.dt);
            if !lu_factor(&mut self.jac, n, &mut self.perm) {
                return false;
            }
            for (r, v) in self.rhs.iter_mut().zip(&self.value) {
                *r = -v;
            }
            lu_solve(&self.jac, n, &self.perm, &self.rhs, &mut dx);
            let size = inf_norm(&dx);
            if !size.is_finite() || size > 0.5 * prev {
                return false;
            }
            if iter == 0 && size > PREDICTOR_TRUST * pred + cfg.tol_track * (1.0 + inf_norm(x)) {
                return false;
            }
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
            if size <= cfg.tol_track * (1.0 + inf_norm(x)) {
                return true;
            }
            prev = size;
        }
        false
    }
}

/// Tracks from `t = 0` to `t = 1` and classifies the endpoint.
pub fn track_path<H: Homotopy + ?Sized>(h: &H, x0: &[C64], cfg: &ToleranceSet) -> PathOutcome {
    track_path_to(h, x0, cfg, 1.0)
}

/// Tracks from `t = 0` to `t_end ≤ 1`, then Newton-refines against the
/// `t = 1` system and classifies the result.
pub fn track_path_to<H: Homotopy + ?Sized>(
    h: &H,
    x0: &[C64],
    cfg: &ToleranceSet,
    t_end: f64,
) -> PathOutcome {
    track_path_capped(h, x0, cfg, t_end, MAX_STEP)
}

/// As [`track_path_to`], with steps in `t` never longer than `max_step`.
pub fn track_path_capped<H: Homotopy + ?Sized>(
    h: &H,
    x0: &[C64],
    cfg: &ToleranceSet,
    t_end: f64,
    max_step: f64,
) -> PathOutcome {
    let n = h.dim();
    let mut ws = Workspace::new(n);
    let mut x = x0.to_vec();
    let mut t = 0.0;
    let mut dt = INITIAL_STEP.min(max_step);
    let mut successes = 0;
    let mut steps = 0;

    let finish = |x: Vec<C64>, t: f64, steps: usize, status: PathStatus| PathOutcome {
        status,
        endpoint: x,
        residual: f64::INFINITY,
        condition_estimate: f64::INFINITY,
        steps,
        t_reached: t,
    };

    while t < t_end {
        if steps >= cfg.max_steps {
            return finish(x, t, steps, PathStatus::Truncated);
        }
        steps += 1;
        let last = dt >= t_end - t;
        let step = if last { t_end - t } else { dt };
        let accepted = match ws.rk4(h, &x, t, step) {
            Some(mut xp) => {
                let pred = inf_norm(&xp.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>());
                if ws.correct(h, &mut xp, t + step, pred, cfg) {
                    x = xp;
                    true
                } else {
                    false
                }
            }
            None => false,
        };
        if accepted {
            t = if last { t_end } else { t + step };
            successes += 1;
            if successes >= 4 {
                dt = (dt * 1.5).min(max_step);
                successes = 0;
            }
            if inf_norm(&x) > DIVERGENCE_NORM {
                return finish(x, t, steps, PathStatus::Diverged);
            }
        } else {
            dt *= 0.5;
            successes = 0;
            if dt < MIN_STEP {
                if t_end - t < SINGULAR_STALL_WINDOW {
                    break;
                }
                return finish(x, t, steps, PathStatus::Diverged);
            }
        }
    }

    let stalled = t < t_end;
    let at_one = AtTime { homotopy: h, t: 1.0 };
    let refined = newton_refine(&at_one, &x, cfg);
    let moved = inf_norm(
        &refined
            .x
            .iter()
            .zip(&x)
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>(),
    );
    let near = moved <= 1e-3 * (1.0 + inf_norm(&x));
    let finite = refined.x.iter().all(|v| v.re.is_finite() && v.im.is_finite());
    let status = if !finite || inf_norm(&refined.x) > DIVERGENCE_NORM {
        PathStatus::Diverged
    } else if refined.converged
        && refined.condition_estimate <= cfg.max_condition()
        && refined.contraction < SINGULAR_CONTRACTION
        && !stalled
    {
        PathStatus::Converged
    } else if near {
        PathStatus::Singular
    } else {
        PathStatus::Diverged
    };
    PathOutcome {
        status,
        endpoint: if finite { refined.x } else { x },
        residual: refined.residual,
        condition_estimate: refined.condition_estimate,
        steps,
        t_reached: if status == PathStatus::Diverged && stalled { t } else { 1.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_polynomial;
    use crate::poly::PolySystem;
    use crate::tracker::HomotopyProblem;

    fn sys(eq: &str) -> PolySystem {
        let vars = vec!["x".to_string()];
        PolySystem::new(1, vec![parse_polynomial(eq, &vars).unwrap()]).unwrap()
    }

    fn re(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    #[test]
    fn newton_simple_root() {
        let r = newton_refine(&sys("x^2-4"), &[re(1.9)], &ToleranceSet::default());
        assert!(r.converged);
        assert!((r.x[0] - re(2.0)).norm() < 1e-12);
        assert!(r.condition_estimate < 10.0);
    }

    #[test]
    fn newton_double_root_is_ill_conditioned() {
        let cfg = ToleranceSet::default();
        let r = newton_refine(&sys("x^2"), &[re(0.1)], &cfg);
        assert!(r.condition_estimate > cfg.max_condition(), "{}", r.condition_estimate);
    }

    #[test]
    fn tracks_to_simple_roots() {
        let start = sys("x^2-1");
        let target = sys("x^2-4");
        let cfg = ToleranceSet::default();
        let gamma = C64::from_polar(1.0, 0.7);
        let h = HomotopyProblem::new(&start, &target, gamma);
        let mut ends = Vec::new();
        for x0 in [re(1.0), re(-1.0)] {
            let out = track_path(&h, &[x0], &cfg);
            assert_eq!(out.status, PathStatus::Converged);
            assert!(out.residual < cfg.tol_newton);
            assert_eq!(out.t_reached, 1.0);
            ends.push(out.endpoint[0]);
        }
        ends.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((ends[0] - re(-2.0)).norm() < 1e-10);
        assert!((ends[1] - re(2.0)).norm() < 1e-10);
    }

    #[test]
    fn double_root_target_is_singular() {
        let start = sys("x^2-1");
        let target = sys("(x+1)^2");
        let cfg = ToleranceSet::default();
        let h = HomotopyProblem::new(&start, &target, C64::from_polar(1.0, 2.1));
        for x0 in [re(1.0), re(-1.0)] {
            let out = track_path(&h, &[x0], &cfg);
            assert_eq!(out.status, PathStatus::Singular, "{out:?}");
            assert!((out.endpoint[0] + re(1.0)).norm() < 1e-4);
        }
    }

    #[test]
    fn identity_homotopy_stays_put() {
        let s = sys("x^3-1");
        let cfg = ToleranceSet::default();
        let h = HomotopyProblem::new(&s, &s, C64::from_polar(1.0, 0.3));
        let x0 = C64::from_polar(1.0, std::f64::consts::TAU / 3.0);
        let out = track_path(&h, &[x0], &cfg);
        assert_eq!(out.status, PathStatus::Converged);
        assert!((out.endpoint[0] - x0).norm() < 1e-12);
    }

    #[test]
    fn path_to_infinity_diverges() {
        // degree drops: one root escapes
        let start = sys("x^2-1");
        let target = sys("x-3");
        let cfg = ToleranceSet::default();
        let h = HomotopyProblem::new(&start, &target, C64::from_polar(1.0, 1.3));
        let statuses: Vec<PathStatus> = [re(1.0), re(-1.0)]
            .iter()
            .map(|&x0| track_path(&h, &[x0], &cfg).status)
            .collect();
        assert!(statuses.contains(&PathStatus::Converged));
        assert!(statuses.contains(&PathStatus::Diverged));
    }

    #[test]
    fn step_budget_truncates() {
        let start = sys("x^2-1");
        let target = sys("x^2-4");
        let cfg = ToleranceSet {
            max_steps: 3,
            ..ToleranceSet::default()
        };
        let h = HomotopyProblem::new(&start, &target, C64::from_polar(1.0, 0.7));
        let out = track_path(&h, &[re(1.0)], &cfg);
        assert_eq!(out.status, PathStatus::Truncated);
        assert!(out.t_reached < 1.0);
    }
}
