//! Start systems with known solutions.
//!
//! * Total degree: `x_j^{D_j} − 1 = 0`, solved by roots of unity.
//! * Two-homogeneous linear products for the variable groups `(z | λ)`:
//!   an equation of bidegree `(p, q)` becomes a product of `p` random affine
//!   forms in `z` and `q` in `λ`. A start point picks, for every equation,
//!   one factor to vanish; exactly `N` equations must pick a `z`-factor and
//!   `c` a `λ`-factor, which leaves two square linear systems.
//!
//! Start points are produced on demand from their index.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::critsys::CriticalSystem;
use crate::error::{Error, Result};
use crate::linalg::solve;
use crate::poly::C64;
use crate::rng::unit_circle_vec;

use super::PolyMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartStrategy {
    TotalDegree,
    TwoHomogeneous,
}

#[derive(Clone, Debug)]
pub struct TotalDegreeStart {
    degrees: Vec<u32>,
}

impl TotalDegreeStart {
    pub fn new(degrees: Vec<u32>) -> Self {
        TotalDegreeStart { degrees }
    }

    pub fn path_count(&self) -> u128 {
        self.degrees.iter().map(|&d| d as u128).product()
    }

    pub fn start_point(&self, mut index: u128) -> Vec<C64> {
        self.degrees
            .iter()
            .map(|&d| {
                let d = d as u128;
                let digit = index % d;
                index /= d;
                C64::from_polar(1.0, std::f64::consts::TAU * digit as f64 / d as f64)
            })
            .collect()
    }
}

impl PolyMap for TotalDegreeStart {
    fn nvars(&self) -> usize {
        self.degrees.len()
    }

    fn neqs(&self) -> usize {
        self.degrees.len()
    }

    fn eval_jac(&self, x: &[C64], value: &mut [C64], jac: &mut [C64]) {
        let n = self.degrees.len();
        jac.iter_mut().for_each(|v| *v = C64::default());
        for (j, &d) in self.degrees.iter().enumerate() {
            if d == 0 {
                value[j] = C64::default();
                continue;
            }
            let lower = x[j].powu(d - 1);
            value[j] = lower * x[j] - 1.0;
            jac[j * n + j] = lower * d as f64;
        }
    }
}

/// Affine form `coeffs·v + constant`.
#[derive(Clone, Debug)]
struct AffineForm {
    coeffs: Vec<C64>,
    constant: C64,
}

impl AffineForm {
    fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut v = unit_circle_vec(rng, n + 1);
        let constant = v.pop().expect("n + 1 entries");
        AffineForm { coeffs: v, constant }
    }

    fn eval(&self, v: &[C64]) -> C64 {
        self.coeffs.iter().zip(v).map(|(a, b)| a * b).sum::<C64>() + self.constant
    }
}

#[derive(Clone, Debug)]
struct Assignment {
    /// `true` where the equation takes a λ-slot.
    lambda_slot: Vec<bool>,
    count: u128,
}

#[derive(Clone, Debug)]
pub struct LinearProductStart {
    nz: usize,
    nl: usize,
    z_forms: Vec<Vec<AffineForm>>,
    l_forms: Vec<Vec<AffineForm>>,
    assignments: Vec<Assignment>,
    /// Prefix sums of assignment counts.
    offsets: Vec<u128>,
}

/// Admissible slot assignments: `nl` equations with positive λ-degree take
/// λ-slots, the others need positive z-degree.
fn assignments(bidegrees: &[(u32, u32)], nl: usize) -> Vec<Assignment> {
    fn rec(
        bidegrees: &[(u32, u32)],
        j: usize,
        left: usize,
        slot: &mut Vec<bool>,
        out: &mut Vec<Assignment>,
    ) {
        let remaining = bidegrees.len() - j;
        if left > remaining {
            return;
        }
        if j == bidegrees.len() {
            let count = bidegrees
                .iter()
                .zip(slot.iter())
                .map(|(&(p, q), &l)| if l { q as u128 } else { p as u128 })
                .product();
            if count > 0 {
                out.push(Assignment {
                    lambda_slot: slot.clone(),
                    count,
                });
            }
            return;
        }
        let (p, q) = bidegrees[j];
        if left > 0 && q > 0 {
            slot.push(true);
            rec(bidegrees, j + 1, left - 1, slot, out);
            slot.pop();
        }
        if p > 0 && remaining > left {
            slot.push(false);
            rec(bidegrees, j + 1, left, slot, out);
            slot.pop();
        }
    }
    let mut out = Vec::new();
    rec(bidegrees, 0, nl, &mut Vec::new(), &mut out);
    out
}

/// Two-homogeneous Bézout number for groups of sizes `(neqs − nl, nl)`.
pub fn two_homogeneous_count(bidegrees: &[(u32, u32)], nl: usize) -> u128 {
    assignments(bidegrees, nl).iter().map(|a| a.count).sum()
}

impl LinearProductStart {
    pub fn new<R: Rng + ?Sized>(bidegrees: &[(u32, u32)], nl: usize, rng: &mut R) -> Self {
        let nz = bidegrees.len() - nl;
        let z_forms = bidegrees
            .iter()
            .map(|&(p, _)| (0..p).map(|_| AffineForm::random(nz, rng)).collect())
            .collect();
        let l_forms = bidegrees
            .iter()
            .map(|&(_, q)| (0..q).map(|_| AffineForm::random(nl, rng)).collect())
            .collect();
        let assignments = assignments(bidegrees, nl);
        let mut offsets = Vec::with_capacity(assignments.len() + 1);
        let mut acc = 0u128;
        offsets.push(0);
        for a in &assignments {
            acc += a.count;
            offsets.push(acc);
        }
        LinearProductStart {
            nz,
            nl,
            z_forms,
            l_forms,
            assignments,
            offsets,
        }
    }

    pub fn path_count(&self) -> u128 {
        *self.offsets.last().expect("nonempty prefix sums")
    }

    pub fn start_point(&self, index: u128) -> Option<Vec<C64>> {
        let a = self.offsets.partition_point(|&o| o <= index) - 1;
        let assignment = &self.assignments[a];
        let mut local = index - self.offsets[a];
        let mut zrows = Vec::with_capacity(self.nz);
        let mut lrows = Vec::with_capacity(self.nl);
        for (j, &is_l) in assignment.lambda_slot.iter().enumerate() {
            let forms = if is_l { &self.l_forms[j] } else { &self.z_forms[j] };
            let len = forms.len() as u128;
            let pick = (local % len) as usize;
            local /= len;
            if is_l {
                lrows.push(&forms[pick]);
            } else {
                zrows.push(&forms[pick]);
            }
        }
        let z = solve_forms(&zrows, self.nz)?;
        let l = solve_forms(&lrows, self.nl)?;
        Some(z.into_iter().chain(l).collect())
    }
}

fn solve_forms(rows: &[&AffineForm], n: usize) -> Option<Vec<C64>> {
    if n == 0 {
        return Some(Vec::new());
    }
    let mut a = Vec::with_capacity(n * n);
    let mut b = Vec::with_capacity(n);
    for r in rows {
        a.extend_from_slice(&r.coeffs);
        b.push(-r.constant);
    }
    solve(&a, n, &b)
}

/// Product rule for `∏ ℓ_r(v)`: returns the value and accumulates the
/// gradient (times `scale`) into `grad`.
fn product_eval(forms: &[AffineForm], v: &[C64]) -> (C64, Vec<C64>) {
    let vals: Vec<C64> = forms.iter().map(|f| f.eval(v)).collect();
    let one = C64::new(1.0, 0.0);
    let mut prefix = vec![one; vals.len() + 1];
    for (i, x) in vals.iter().enumerate() {
        prefix[i + 1] = prefix[i] * x;
    }
    let mut grad = vec![C64::default(); v.len()];
    let mut suffix = one;
    for r in (0..vals.len()).rev() {
        let others = prefix[r] * suffix;
        for (g, a) in grad.iter_mut().zip(&forms[r].coeffs) {
            *g += others * a;
        }
        suffix *= vals[r];
    }
    (prefix[vals.len()], grad)
}

impl PolyMap for LinearProductStart {
    fn nvars(&self) -> usize {
        self.nz + self.nl
    }

    fn neqs(&self) -> usize {
        self.nz + self.nl
    }

    fn eval_jac(&self, x: &[C64], value: &mut [C64], jac: &mut [C64]) {
        let n = self.nz + self.nl;
        let (z, l) = x.split_at(self.nz);
        for j in 0..n {
            let (zv, zg) = product_eval(&self.z_forms[j], z);
            let (lv, lg) = product_eval(&self.l_forms[j], l);
            value[j] = zv * lv;
            let row = &mut jac[j * n..(j + 1) * n];
            for (q, g) in zg.iter().enumerate() {
                row[q] = g * lv;
            }
            for (q, g) in lg.iter().enumerate() {
                row[self.nz + q] = g * zv;
            }
        }
    }
}

pub enum StartSystem {
    TotalDegree(TotalDegreeStart),
    TwoHomogeneous(LinearProductStart),
}

impl StartSystem {
    pub fn strategy(&self) -> StartStrategy {
        match self {
            StartSystem::TotalDegree(_) => StartStrategy::TotalDegree,
            StartSystem::TwoHomogeneous(_) => StartStrategy::TwoHomogeneous,
        }
    }

    pub fn path_count(&self) -> u128 {
        match self {
            StartSystem::TotalDegree(s) => s.path_count(),
            StartSystem::TwoHomogeneous(s) => s.path_count(),
        }
    }

    /// The `index`-th start solution; `None` if a generic linear solve
    /// unexpectedly fails.
    pub fn start_point(&self, index: u128) -> Option<Vec<C64>> {
        match self {
            StartSystem::TotalDegree(s) => Some(s.start_point(index)),
            StartSystem::TwoHomogeneous(s) => s.start_point(index),
        }
    }
}

impl PolyMap for StartSystem {
    fn nvars(&self) -> usize {
        match self {
            StartSystem::TotalDegree(s) => s.nvars(),
            StartSystem::TwoHomogeneous(s) => s.nvars(),
        }
    }

    fn neqs(&self) -> usize {
        self.nvars()
    }

    fn eval_jac(&self, x: &[C64], value: &mut [C64], jac: &mut [C64]) {
        match self {
            StartSystem::TotalDegree(s) => s.eval_jac(x, value, jac),
            StartSystem::TwoHomogeneous(s) => s.eval_jac(x, value, jac),
        }
    }
}

pub fn make_start_system<R: Rng + ?Sized>(
    system: &CriticalSystem,
    strategy: StartStrategy,
    rng: &mut R,
) -> Result<StartSystem> {
    if system.system().len() != system.system().nvars() {
        return Err(Error::Input("start systems need a square target".into()));
    }
    Ok(match strategy {
        StartStrategy::TotalDegree => {
            StartSystem::TotalDegree(TotalDegreeStart::new(system.degrees()))
        }
        StartStrategy::TwoHomogeneous => {
            let bidegrees = system.bidegrees();
            if bidegrees.len() != system.system().len() {
                return Err(Error::Input("bidegree table is missing".into()));
            }
            StartSystem::TwoHomogeneous(LinearProductStart::new(bidegrees, system.codim(), rng))
        }
    })
}
