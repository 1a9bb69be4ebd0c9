//! Lagrange-multiplier systems whose nonsingular torus solutions are the
//! degeneration points counted by a removal ML degree.
//!
//! For a slice index `k`, the sliced variety is `Y = X ∩ H¹ ∩ … ∩ H^{k−1}`,
//! cut out by `G = F ∪ {H¹, …, H^{k−1}}` and of codimension
//! `c = N − d + max(k−1, 0)`. `G` is compressed to `c` random combinations
//! `ĝ = R·G`, and with `f = a·z − b` the removed hyperplane `H^k`, a point
//! `z` degenerates the form `Σ u_i dz_i/z_i + u_{N+1} df/f` on `Y ∖ H^k`
//! when, for every `i`,
//!
//! ```text
//! u_i·f(z) + u_{N+1}·a_i·z_i − z_i·f(z)·Σ_j λ_j ∂ĝ_j/∂z_i = 0.
//! ```
//!
//! This is the Lagrange condition after multiplying equation `i` by
//! `z_i·f(z)`. For `k = 0` there is no `f` and the equation is
//! `u_i − z_i·Σ_j λ_j ∂ĝ_j/∂z_i = 0`. Unknowns are ordered
//! `(z_1..z_N, λ_1..λ_c)`, equations as `(ĝ_1..ĝ_c, L_1..L_N)`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::poly::{CompiledPoly, Polynomial, PolySystem, PowerTable, C64};
use crate::rng::unit_circle_vec;
use crate::tracker::{ParametricMap, PolyMap};

/// The affine hyperplane `a·z − b = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperplane {
    pub a: Vec<C64>,
    pub b: C64,
}

impl Hyperplane {
    pub fn new(a: Vec<C64>, b: C64) -> Result<Self> {
        if a.iter().all(|x| *x == C64::default()) {
            return Err(Error::Input("hyperplane direction must be nonzero".into()));
        }
        Ok(Hyperplane { a, b })
    }

    /// Hyperplane with direction `a` through `p`.
    pub fn through(a: Vec<C64>, p: &[C64]) -> Self {
        let b = a.iter().zip(p).map(|(x, y)| x * y).sum();
        Hyperplane { a, b }
    }

    pub fn value(&self, z: &[C64]) -> C64 {
        self.a.iter().zip(z).map(|(x, y)| x * y).sum::<C64>() - self.b
    }

    pub fn polynomial(&self) -> Polynomial {
        Polynomial::affine(&self.a, -self.b)
    }

    pub fn nvars(&self) -> usize {
        self.a.len()
    }
}

/// Coefficients `u_1..u_{N+1}` of the logarithmic 1-form; the last one
/// multiplies `df/f` for the removed hyperplane.
#[derive(Clone, Debug, PartialEq)]
pub struct MLForm {
    pub u: Vec<C64>,
}

impl MLForm {
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        MLForm {
            u: unit_circle_vec(rng, n + 1),
        }
    }
}

/// `count` hyperplanes through `p` with directions uniform on the unit
/// circle.
pub fn hyperplanes_through_point<R: Rng + ?Sized>(
    p: &[C64],
    count: usize,
    rng: &mut R,
) -> Vec<Hyperplane> {
    (0..count)
        .map(|_| Hyperplane::through(unit_circle_vec(rng, p.len()), p))
        .collect()
}

/// Row-major `rows × cols` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Randomizer {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<C64>,
}

impl Randomizer {
    pub fn get(&self, j: usize, l: usize) -> C64 {
        self.entries[j * self.cols + l]
    }
}

/// `c` random unit-modulus combinations of the equations of `g`.
pub fn randomize_constraints<R: Rng + ?Sized>(
    g: &PolySystem,
    c: usize,
    rng: &mut R,
) -> Result<(PolySystem, Randomizer)> {
    if c > g.nvars() {
        return Err(Error::Input(format!(
            "cannot form {c} constraints in {} variables",
            g.nvars()
        )));
    }
    let cols = g.len();
    let entries = unit_circle_vec(rng, c * cols);
    let r = Randomizer {
        rows: c,
        cols,
        entries,
    };
    let eqs = (0..c)
        .map(|j| {
            g.equations()
                .iter()
                .enumerate()
                .fold(Polynomial::zero(g.nvars()), |acc, (l, p)| {
                    &acc + &p.scale(r.get(j, l))
                })
        })
        .collect();
    Ok((PolySystem::new(g.nvars(), eqs)?, r))
}

struct DerivTable {
    value: CompiledPoly,
    grad: Vec<CompiledPoly>,
    /// Upper triangle, `(q, r)` with `q ≤ r`, row by row.
    hess: Vec<CompiledPoly>,
}

impl DerivTable {
    fn new(p: &Polynomial) -> Self {
        let n = p.nvars();
        let grads: Vec<Polynomial> = (0..n)
            .map(|q| p.partial_derivative(q).expect("in range"))
            .collect();
        let mut hess = Vec::with_capacity(n * (n + 1) / 2);
        for (q, gq) in grads.iter().enumerate() {
            for r in q..n {
                hess.push(CompiledPoly::new(
                    &gq.partial_derivative(r).expect("in range"),
                ));
            }
        }
        DerivTable {
            value: CompiledPoly::new(p),
            grad: grads.iter().map(CompiledPoly::new).collect(),
            hess,
        }
    }
}

/// Square critical system for one removal ML degree.
pub struct CriticalSystem {
    n: usize,
    k: usize,
    c: usize,
    removed: Option<Hyperplane>,
    sliced: Vec<Hyperplane>,
    randomizer: Randomizer,
    form: MLForm,
    /// Expanded polynomial form in `N + c` variables.
    system: PolySystem,
    bidegrees: Vec<(u32, u32)>,
    defining: Vec<DerivTable>,
    max_degree: usize,
}

impl std::fmt::Debug for CriticalSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CriticalSystem")
            .field("n", &self.n)
            .field("k", &self.k)
            .field("c", &self.c)
            .field("bidegrees", &self.bidegrees)
            .finish_non_exhaustive()
    }
}

/// Codimension of the sliced variety for slice index `k`.
pub fn slice_codimension(n: usize, d: usize, k: usize) -> usize {
    n - d + k.saturating_sub(1)
}

pub fn build_removal_system<R: Rng + ?Sized>(
    f: &PolySystem,
    d: usize,
    hyperplanes: &[Hyperplane],
    k: usize,
    form: &MLForm,
    rng: &mut R,
) -> Result<CriticalSystem> {
    let n = f.nvars();
    if d >= n {
        return Err(Error::Input(format!("dimension {d} must be below {n}")));
    }
    if k > d + 1 {
        return Err(Error::Input(format!("slice index {k} exceeds d + 1 = {}", d + 1)));
    }
    if hyperplanes.len() < k {
        return Err(Error::Input(format!(
            "slice index {k} needs {k} hyperplanes, got {}",
            hyperplanes.len()
        )));
    }
    if let Some(h) = hyperplanes.iter().find(|h| h.nvars() != n) {
        return Err(Error::Input(format!(
            "hyperplane has {} coordinates, system has {n} variables",
            h.nvars()
        )));
    }
    if form.u.len() != n + 1 || form.u.iter().any(|x| *x == C64::default()) {
        return Err(Error::Input(format!(
            "the 1-form needs {} nonzero coefficients",
            n + 1
        )));
    }
    let c = slice_codimension(n, d, k);
    let sliced: Vec<Hyperplane> = hyperplanes[..k.saturating_sub(1)].to_vec();
    let removed = (k >= 1).then(|| hyperplanes[k - 1].clone());

    let mut generators = f.equations().to_vec();
    generators.extend(sliced.iter().map(Hyperplane::polynomial));
    if generators.len() < c {
        return Err(Error::Input(format!(
            "{} defining equations cannot cut out codimension {c}",
            generators.len()
        )));
    }
    let g = PolySystem::new(n, generators)?;
    let (ghat, randomizer) = randomize_constraints(&g, c, rng)?;

    let system = expand(n, c, &ghat, removed.as_ref(), form)?;
    let bidegrees = system
        .equations()
        .iter()
        .map(|p| {
            (
                p.partial_degree(0..n).unwrap_or(0),
                p.partial_degree(n..n + c).unwrap_or(0),
            )
        })
        .collect();
    let max_degree = f
        .equations()
        .iter()
        .map(|p| p.total_degree().unwrap_or(0) as usize)
        .max()
        .unwrap_or(1)
        .max(1);

    Ok(CriticalSystem {
        n,
        k,
        c,
        removed,
        sliced,
        randomizer,
        form: form.clone(),
        system,
        bidegrees,
        defining: f.equations().iter().map(DerivTable::new).collect(),
        max_degree,
    })
}

fn expand(
    n: usize,
    c: usize,
    ghat: &PolySystem,
    removed: Option<&Hyperplane>,
    form: &MLForm,
) -> Result<PolySystem> {
    let total = n + c;
    let lifted: Vec<Polynomial> = ghat.equations().iter().map(|p| p.embed(total, 0)).collect();
    let (fpoly, a) = match removed {
        Some(h) => (h.polynomial().embed(total, 0), h.a.clone()),
        None => (
            Polynomial::constant(total, C64::new(1.0, 0.0)),
            vec![C64::default(); n],
        ),
    };
    let mut eqs = lifted.clone();
    for (i, &ai) in a.iter().enumerate().take(n) {
        let zi = Polynomial::var(total, i);
        let mut s = Polynomial::zero(total);
        for (j, gj) in lifted.iter().enumerate() {
            let lam = Polynomial::var(total, n + j);
            s = &s + &(&lam * &gj.partial_derivative(i)?);
        }
        let lagrange = &(&fpoly.scale(form.u[i]) + &zi.scale(form.u[n] * ai))
            - &(&(&zi * &fpoly) * &s);
        eqs.push(lagrange);
    }
    PolySystem::new(total, eqs)
}

impl CriticalSystem {
    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn codim(&self) -> usize {
        self.c
    }

    pub fn removed(&self) -> Option<&Hyperplane> {
        self.removed.as_ref()
    }

    pub fn sliced(&self) -> &[Hyperplane] {
        &self.sliced
    }

    pub fn randomizer(&self) -> &Randomizer {
        &self.randomizer
    }

    pub fn form(&self) -> &MLForm {
        &self.form
    }

    pub fn system(&self) -> &PolySystem {
        &self.system
    }

    /// `(z-degree, λ-degree)` of every equation.
    pub fn bidegrees(&self) -> &[(u32, u32)] {
        &self.bidegrees
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.system.degrees()
    }

    /// Offsets of the sliced hyperplanes followed by that of the removed one.
    pub fn params(&self) -> Vec<C64> {
        self.sliced
            .iter()
            .chain(self.removed.iter())
            .map(|h| h.b)
            .collect()
    }

    /// Same system with the hyperplane offsets replaced.
    pub fn with_params(&self, params: &[C64]) -> Vec<Hyperplane> {
        self.sliced
            .iter()
            .chain(self.removed.iter())
            .zip(params)
            .map(|(h, &b)| Hyperplane { a: h.a.clone(), b })
            .collect()
    }

    /// Multipliers solving the Lagrange block at a given `z` in the least
    /// squares sense (exact at a true degeneration point).
    pub fn multipliers_at(&self, z: &[C64]) -> Option<Vec<C64>> {
        let n = self.n;
        let c = self.c;
        let total = n + c;
        let mut x = z.to_vec();
        x.extend(std::iter::repeat_n(C64::default(), c));
        let mut v = vec![C64::default(); total];
        let mut jac = vec![C64::default(); total * total];
        self.eval_jac(&x, &mut v, &mut jac);
        // L(z, λ) = L(z, 0) + B λ with B the λ-block of the Lagrange rows.
        let mut normal = vec![C64::default(); c * c];
        let mut rhs = vec![C64::default(); c];
        for i in 0..n {
            let row = (c + i) * total + n;
            for p in 0..c {
                let bp = jac[row + p];
                rhs[p] -= bp.conj() * v[c + i];
                for q in 0..c {
                    normal[p * c + q] += bp.conj() * jac[row + q];
                }
            }
        }
        crate::linalg::solve(&normal, c, &rhs)
    }
}

impl ParametricMap for CriticalSystem {
    fn nvars(&self) -> usize {
        self.n + self.c
    }

    fn neqs(&self) -> usize {
        self.n + self.c
    }

    fn nparams(&self) -> usize {
        self.sliced.len() + usize::from(self.removed.is_some())
    }

    fn eval_param(
        &self,
        x: &[C64],
        params: &[C64],
        value: &mut [C64],
        jac: &mut [C64],
        dparams: Option<&mut [C64]>,
    ) {
        let n = self.n;
        let c = self.c;
        let total = n + c;
        let m = self.defining.len();
        let mp = m + self.sliced.len();
        let z = &x[..n];
        let lam = &x[n..];
        let zero = C64::default();

        let mut pow = PowerTable::new(n, self.max_degree);
        pow.fill(z);

        // Generator values, gradients (mp × n) and the λ-weighted Hessian.
        let mut gval = vec![zero; mp];
        let mut ggrad = vec![zero; mp * n];
        let mut w = vec![zero; mp];
        for (l, wl) in w.iter_mut().enumerate() {
            *wl = (0..c).map(|j| self.randomizer.get(j, l) * lam[j]).sum();
        }
        let mut whess = vec![zero; n * n];
        for (l, t) in self.defining.iter().enumerate() {
            gval[l] = t.value.eval(&pow);
            for q in 0..n {
                ggrad[l * n + q] = t.grad[q].eval(&pow);
            }
            if w[l] != zero {
                let mut idx = 0;
                for q in 0..n {
                    for r in q..n {
                        let h = t.hess[idx].eval(&pow) * w[l];
                        idx += 1;
                        whess[q * n + r] += h;
                        if r != q {
                            whess[r * n + q] += h;
                        }
                    }
                }
            }
        }
        for (h, hp) in self.sliced.iter().enumerate() {
            let l = m + h;
            gval[l] = hp.a.iter().zip(z).map(|(a, zi)| a * zi).sum::<C64>() - params[h];
            ggrad[l * n..(l + 1) * n].copy_from_slice(&hp.a);
        }

        jac.iter_mut().for_each(|v| *v = zero);

        // Randomized constraints.
        for j in 0..c {
            let mut v = zero;
            for l in 0..mp {
                let r = self.randomizer.get(j, l);
                v += r * gval[l];
                for q in 0..n {
                    jac[j * total + q] += r * ggrad[l * n + q];
                }
            }
            value[j] = v;
        }

        // S_i = Σ_l w_l ∂_i G_l
        let s: Vec<C64> = (0..n)
            .map(|i| (0..mp).map(|l| w[l] * ggrad[l * n + i]).sum())
            .collect();

        let u = &self.form.u;
        let (fval, a, un) = match &self.removed {
            Some(h) => {
                let b = params[self.sliced.len()];
                let fv = h.a.iter().zip(z).map(|(a, zi)| a * zi).sum::<C64>() - b;
                (fv, h.a.as_slice(), u[n])
            }
            None => (C64::new(1.0, 0.0), &[][..], zero),
        };
        let a_at = |q: usize| if a.is_empty() { zero } else { a[q] };

        for i in 0..n {
            let row = (c + i) * total;
            let zi = z[i];
            value[c + i] = u[i] * fval + un * a_at(i) * zi - zi * fval * s[i];
            for q in 0..n {
                let mut d = u[i] * a_at(q) - zi * a_at(q) * s[i] - zi * fval * whess[i * n + q];
                if q == i {
                    d += un * a_at(i) - fval * s[i];
                }
                jac[row + q] = d;
            }
            for j in 0..c {
                jac[row + n + j] = -zi * fval * jac[j * total + i];
            }
        }

        if let Some(dp) = dparams {
            let np = self.nparams();
            dp.iter_mut().for_each(|v| *v = zero);
            for (h, _) in self.sliced.iter().enumerate() {
                for j in 0..c {
                    dp[j * np + h] = -self.randomizer.get(j, m + h);
                }
            }
            if self.removed.is_some() {
                let col = self.sliced.len();
                for i in 0..n {
                    dp[(c + i) * np + col] = -(u[i] - z[i] * s[i]);
                }
            }
        }
    }
}

impl PolyMap for CriticalSystem {
    fn nvars(&self) -> usize {
        self.n + self.c
    }

    fn neqs(&self) -> usize {
        self.n + self.c
    }

    fn eval_jac(&self, x: &[C64], value: &mut [C64], jac: &mut [C64]) {
        let params = self.params();
        self.eval_param(x, &params, value, jac, None);
    }
}
