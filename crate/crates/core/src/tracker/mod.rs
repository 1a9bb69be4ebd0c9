//! Homotopy continuation: start systems, straight-line and parameter
//! homotopies, predictor-corrector path tracking and endpoint handling.

mod dedup;
mod path;
mod start;

pub use dedup::{deduplicate, deduplicate_ranked};
pub use path::{
    newton_refine, track_path, track_path_capped, track_path_to, NewtonResult, PathOutcome,
    PathStatus, CAREFUL_MAX_STEPS, MAX_STEP,
};
pub use start::{
    make_start_system, two_homogeneous_count, LinearProductStart, StartStrategy, StartSystem,
    TotalDegreeStart,
};

use crate::poly::{PolySystem, C64};

/// A square-or-not polynomial map with a dense Jacobian.
pub trait PolyMap: Sync {
    fn nvars(&self) -> usize;
    fn neqs(&self) -> usize;
    /// Writes the values and the row-major `neqs × nvars` Jacobian.
    fn eval_jac(&self, x: &[C64], value: &mut [C64], jac: &mut [C64]);
}

/// A polynomial map depending affinely on a parameter vector.
pub trait ParametricMap: Sync {
    fn nvars(&self) -> usize;
    fn neqs(&self) -> usize;
    fn nparams(&self) -> usize;
    /// As [`PolyMap::eval_jac`], plus the row-major `neqs × nparams`
    /// derivative with respect to the parameters when requested.
    fn eval_param(
        &self,
        x: &[C64],
        params: &[C64],
        value: &mut [C64],
        jac: &mut [C64],
        dparams: Option<&mut [C64]>,
    );
}

impl PolyMap for PolySystem {
    fn nvars(&self) -> usize {
        PolySystem::nvars(self)
    }

    fn neqs(&self) -> usize {
        self.len()
    }

    fn eval_jac(&self, x: &[C64], value: &mut [C64], jac: &mut [C64]) {
        let n = PolySystem::nvars(self);
        for (j, p) in self.equations().iter().enumerate() {
            value[j] = p.eval_grad(x, &mut jac[j * n..(j + 1) * n]);
        }
    }
}

/// `H(x, t)` together with `∂H/∂x` and `∂H/∂t`.
pub trait Homotopy: Sync {
    fn dim(&self) -> usize;
    fn evaluate(&self, x: &[C64], t: f64, value: &mut [C64], jac: &mut [C64], dt: &mut [C64]);
}

/// `H(x,t) = (1−t)·γ·start(x) + t·target(x)`.
pub struct HomotopyProblem<'a, S: ?Sized, T: ?Sized> {
    pub start: &'a S,
    pub target: &'a T,
    pub gamma: C64,
}

impl<'a, S: PolyMap + ?Sized, T: PolyMap + ?Sized> HomotopyProblem<'a, S, T> {
    pub fn new(start: &'a S, target: &'a T, gamma: C64) -> Self {
        assert_eq!(start.nvars(), target.nvars(), "start/target variable count");
        assert_eq!(start.neqs(), target.neqs(), "start/target equation count");
        assert_eq!(target.nvars(), target.neqs(), "homotopy must be square");
        HomotopyProblem {
            start,
            target,
            gamma,
        }
    }
}

impl<S: PolyMap + ?Sized, T: PolyMap + ?Sized> Homotopy for HomotopyProblem<'_, S, T> {
    fn dim(&self) -> usize {
        self.target.nvars()
    }

    fn evaluate(&self, x: &[C64], t: f64, value: &mut [C64], jac: &mut [C64], dt: &mut [C64]) {
        let n = self.dim();
        let mut sv = vec![C64::default(); n];
        let mut sj = vec![C64::default(); n * n];
        self.start.eval_jac(x, &mut sv, &mut sj);
        self.target.eval_jac(x, value, jac);
        let gs = self.gamma * (1.0 - t);
        for i in 0..n {
            let s = self.gamma * sv[i];
            dt[i] = value[i] - s;
            value[i] = gs * sv[i] + value[i] * t;
        }
        for (j, s) in jac.iter_mut().zip(&sj) {
            *j = gs * s + *j * t;
        }
    }
}

/// Parameter homotopy along `p(t) = (1−t)·from + t·to + t(1−t)·bend`.
/// An empty `bend` gives the straight segment.
pub struct ParameterHomotopy<'a, M: ?Sized> {
    pub map: &'a M,
    pub from: Vec<C64>,
    pub to: Vec<C64>,
    pub bend: Vec<C64>,
}

impl<M: ?Sized> ParameterHomotopy<'_, M> {
    fn bend_at(&self, h: usize) -> C64 {
        self.bend.get(h).copied().unwrap_or_default()
    }
}

impl<M: ParametricMap + ?Sized> Homotopy for ParameterHomotopy<'_, M> {
    fn dim(&self) -> usize {
        self.map.nvars()
    }

    fn evaluate(&self, x: &[C64], t: f64, value: &mut [C64], jac: &mut [C64], dt: &mut [C64]) {
        let n = self.dim();
        let np = self.map.nparams();
        let params: Vec<C64> = (0..np)
            .map(|h| self.from[h] * (1.0 - t) + self.to[h] * t + self.bend_at(h) * (t * (1.0 - t)))
            .collect();
        let velocity: Vec<C64> = (0..np)
            .map(|h| self.to[h] - self.from[h] + self.bend_at(h) * (1.0 - 2.0 * t))
            .collect();
        let mut dp = vec![C64::default(); n * np];
        self.map.eval_param(x, &params, value, jac, Some(&mut dp));
        for i in 0..n {
            dt[i] = (0..np).map(|h| dp[i * np + h] * velocity[h]).sum();
        }
    }
}

/// Freezes a homotopy at a fixed `t`.
pub struct AtTime<'a, H: ?Sized> {
    pub homotopy: &'a H,
    pub t: f64,
}

impl<H: Homotopy + ?Sized> PolyMap for AtTime<'_, H> {
    fn nvars(&self) -> usize {
        self.homotopy.dim()
    }

    fn neqs(&self) -> usize {
        self.homotopy.dim()
    }

    fn eval_jac(&self, x: &[C64], value: &mut [C64], jac: &mut [C64]) {
        let mut dt = vec![C64::default(); self.homotopy.dim()];
        self.homotopy.evaluate(x, self.t, value, jac, &mut dt);
    }
}

/// Freezes a parametric map at fixed parameters.
pub struct AtParams<'a, M: ?Sized> {
    pub map: &'a M,
    pub params: Vec<C64>,
}

impl<M: ParametricMap + ?Sized> PolyMap for AtParams<'_, M> {
    fn nvars(&self) -> usize {
        self.map.nvars()
    }

    fn neqs(&self) -> usize {
        self.map.neqs()
    }

    fn eval_jac(&self, x: &[C64], value: &mut [C64], jac: &mut [C64]) {
        self.map.eval_param(x, &self.params, value, jac, None);
    }
}
