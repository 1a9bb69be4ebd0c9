//! Exact arithmetic over Q and numerical helpers shared by the integration
//! tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use eulerml::mldeg::SolveOptions;
use eulerml::obstruction::removal_profile;
use eulerml::parse::parse_polynomial;
use eulerml::poly::{PolySystem, C64};
use eulerml::rng::substream;
use eulerml::tracker::PolyMap;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Univariate polynomial, coefficient `i` of `x^i`.
#[derive(Clone, Debug)]
pub struct UPoly(pub Vec<Q>);

impl UPoly {
    pub fn trimmed(mut v: Vec<Q>) -> Self {
        while v.last().is_some_and(Zero::is_zero) {
            v.pop();
        }
        UPoly(v)
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn derivative(&self) -> Self {
        UPoly::trimmed(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * q(i as i64))
                .collect(),
        )
    }

    pub fn rem(&self, m: &UPoly) -> Self {
        let dm = m.degree().expect("nonzero divisor");
        let lead = m.0[dm].clone();
        let mut r = self.0.clone();
        while r.len() > dm {
            let top = r.len() - 1;
            let factor = &r[top] / &lead;
            for (i, c) in m.0.iter().enumerate() {
                let idx = top - dm + i;
                r[idx] = &r[idx] - &factor * c;
            }
            r.pop();
            while r.last().is_some_and(Zero::is_zero) {
                r.pop();
            }
        }
        UPoly::trimmed(r)
    }

    pub fn gcd(&self, other: &UPoly) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while b.degree().is_some() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a
    }

    pub fn distinct_roots(&self) -> usize {
        let d = self.degree().unwrap_or(0);
        d - self.gcd(&self.derivative()).degree().unwrap_or(0)
    }
}

/// Bivariate polynomial in x, y keyed by `(deg_x, deg_y)`.
#[derive(Clone, Debug, Default)]
pub struct BiPoly(pub BTreeMap<(u32, u32), Q>);

impl BiPoly {
    pub fn constant(c: Q) -> Self {
        BiPoly([((0, 0), c)].into_iter().collect())
    }

    /// `a·x + b·y + c`.
    pub fn linear(a: Q, b: Q, c: Q) -> Self {
        BiPoly([((1, 0), a), ((0, 1), b), ((0, 0), c)].into_iter().collect())
    }

    pub fn add(&self, o: &BiPoly) -> BiPoly {
        let mut m = self.0.clone();
        for (k, v) in &o.0 {
            let e = m.entry(*k).or_insert_with(Q::zero);
            *e = &*e + v;
        }
        m.retain(|_, v| !v.is_zero());
        BiPoly(m)
    }

    pub fn mul(&self, o: &BiPoly) -> BiPoly {
        let mut m: BTreeMap<(u32, u32), Q> = BTreeMap::new();
        for ((a, b), v) in &self.0 {
            for ((c, d), w) in &o.0 {
                let e = m.entry((a + c, b + d)).or_insert_with(Q::zero);
                *e = &*e + v * w;
            }
        }
        m.retain(|_, v| !v.is_zero());
        BiPoly(m)
    }

    pub fn scale(&self, s: &Q) -> BiPoly {
        BiPoly(self.0.iter().map(|(k, v)| (*k, v * s)).filter(|(_, v)| !v.is_zero()).collect())
    }

    pub fn pow(&self, e: u32) -> BiPoly {
        (0..e).fold(BiPoly::constant(q(1)), |acc, _| acc.mul(self))
    }

    pub fn degree(&self) -> u32 {
        self.0.keys().map(|(a, b)| a + b).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &Q, y: &Q) -> Q {
        self.0.iter().fold(Q::zero(), |acc, ((a, b), v)| {
            acc + v * num_traits::pow(x.clone(), *a as usize) * num_traits::pow(y.clone(), *b as usize)
        })
    }

    /// Partial derivative in x (`var = 0`) or y (`var = 1`).
    pub fn derivative(&self, var: usize) -> BiPoly {
        BiPoly(
            self.0
                .iter()
                .filter_map(|(&(a, b), c)| {
                    let e = if var == 0 { a } else { b };
                    (e > 0).then(|| {
                        let key = if var == 0 { (a - 1, b) } else { (a, b - 1) };
                        (key, c * q(e as i64))
                    })
                })
                .collect(),
        )
    }

    /// f(0, y) as a polynomial in y.
    pub fn on_x_axis_zero(&self) -> UPoly {
        self.restrict(|(a, b)| (*a == 0).then_some(*b))
    }

    /// f(x, 0) as a polynomial in x.
    pub fn on_y_axis_zero(&self) -> UPoly {
        self.restrict(|(a, b)| (*b == 0).then_some(*a))
    }

    /// Top-degree form evaluated at (1, s).
    pub fn top_form(&self) -> UPoly {
        let d = self.degree();
        self.restrict(|(a, b)| (a + b == d).then_some(*b))
    }

    pub fn restrict(&self, pick: impl Fn(&(u32, u32)) -> Option<u32>) -> UPoly {
        let mut v = vec![Q::zero(); self.degree() as usize + 1];
        for (k, c) in &self.0 {
            if let Some(i) = pick(k) {
                v[i as usize] = &v[i as usize] + c;
            }
        }
        UPoly::trimmed(v)
    }

    /// Places of the curve on the coordinate axes and the line at infinity,
    /// provided they are transverse: full degree on every boundary line,
    /// the origin and the two coordinate points at infinity off the curve,
    /// and distinct intersections. Returns `None` otherwise.
    pub fn removed_places(&self) -> Option<usize> {
        let d = self.degree() as usize;
        let lines = [self.on_x_axis_zero(), self.on_y_axis_zero(), self.top_form()];
        if self.eval(&q(0), &q(0)).is_zero() {
            return None;
        }
        let mut total = 0;
        for l in &lines {
            if l.degree() != Some(d) || l.0[0].is_zero() {
                return None;
            }
            let n = l.distinct_roots();
            if n != d {
                return None;
            }
            total += n;
        }
        Some(total)
    }

    pub fn to_text(&self) -> String {
        let terms: Vec<String> = self
            .0
            .iter()
            .map(|((a, b), c)| format!("({:?})*x^{a}*y^{b}", c.to_f64().unwrap()))
            .collect();
        terms.join(" + ")
    }
}

pub fn to_c(x: &Q) -> C64 {
    C64::new(x.to_f64().unwrap(), 0.0)
}

pub fn system(f: &BiPoly) -> PolySystem {
    let names = vec!["x".to_string(), "y".to_string()];
    PolySystem::new(2, vec![parse_polynomial(&f.to_text(), &names).unwrap()]).unwrap()
}

pub fn profile(f: &BiPoly, point: &[C64], stream: u64) -> Vec<usize> {
    let opts = SolveOptions::default();
    let mut rng = substream(2024, &[stream]);
    removal_profile(&system(f), 1, point, "P", &opts, &mut rng)
        .unwrap()
        .r
}

/// `removed − 2 + 2g`, then `+ D`, then `D − drop`.
pub fn expected(removed: usize, genus: usize, degree: usize, drop: usize) -> Vec<usize> {
    let r0 = removed + 2 * genus - 2;
    vec![r0, r0 + degree, degree - drop]
}

/// Q(u,v) + C(u,v) with u = x − p, v = y − q: a node at (p, q) whenever the
/// quadratic part is nondegenerate and shares no factor with the cubic part.
pub struct NodalCubic {
    pub f: BiPoly,
    pub quad: [Q; 3],
    pub cubic: [Q; 4],
    pub node: (Q, Q),
}

impl NodalCubic {
    pub fn new(quad: [i64; 3], cubic: [i64; 4], node: (i64, i64)) -> Self {
        let (p, r) = (q(node.0), q(node.1));
        let u = BiPoly::linear(q(1), q(0), -p.clone());
        let v = BiPoly::linear(q(0), q(1), -r.clone());
        let mut f = BiPoly::default();
        for (i, c) in quad.iter().enumerate() {
            let m = u.pow(2 - i as u32).mul(&v.pow(i as u32));
            f = f.add(&m.scale(&q(*c)));
        }
        for (i, c) in cubic.iter().enumerate() {
            let m = u.pow(3 - i as u32).mul(&v.pow(i as u32));
            f = f.add(&m.scale(&q(*c)));
        }
        NodalCubic {
            f,
            quad: quad.map(q),
            cubic: cubic.map(q),
            node: (p, r),
        }
    }

    pub fn is_irreducible_nodal(&self) -> bool {
        let [a, b, c] = &self.quad;
        let disc = b * b - q(4) * a * c;
        let qs = UPoly::trimmed(self.quad.to_vec());
        let cs = UPoly::trimmed(self.cubic.to_vec());
        !disc.is_zero()
            && !self.cubic[3].is_zero()
            && qs.degree().is_some()
            && qs.gcd(&cs).degree() == Some(0)
    }

    /// The point with v = s·u other than the node.
    pub fn point_on_branch(&self, s: &Q) -> (Q, Q) {
        let powers = |coef: &[Q]| {
            coef.iter()
                .enumerate()
                .fold(Q::zero(), |acc, (i, c)| acc + c * num_traits::pow(s.clone(), i))
        };
        let u = -powers(&self.quad) / powers(&self.cubic);
        (&self.node.0 + &u, &self.node.1 + s * &u)
    }
}

/// Solves `m·w = v` over Q by Cramer's rule.
pub fn solve3(m: &[[Q; 3]; 3], v: &[Q; 3]) -> [Q; 3] {
    let det = |a: &[[Q; 3]; 3]| {
        &a[0][0] * (&a[1][1] * &a[2][2] - &a[1][2] * &a[2][1])
            - &a[0][1] * (&a[1][0] * &a[2][2] - &a[1][2] * &a[2][0])
            + &a[0][2] * (&a[1][0] * &a[2][1] - &a[1][1] * &a[2][0])
    };
    let d = det(m);
    assert!(!d.is_zero(), "singular change of coordinates");
    std::array::from_fn(|col| {
        let mut a = m.clone();
        for row in 0..3 {
            a[row][col] = v[row].clone();
        }
        det(&a) / &d
    })
}

/// `Σ c_i L_i^D` for linear forms `L = M·(x, y, 1)`; smooth because it is a
/// projective change of coordinates of a diagonal (Fermat-type) curve.
/// Also returns the affine image of the projective point `v` on the model.
pub fn fermat_type(degree: u32, signs: [i64; 3], m: [[i64; 3]; 3], v: [i64; 3]) -> (BiPoly, (Q, Q)) {
    let mq = m.map(|row| row.map(q));
    let mut f = BiPoly::default();
    for (row, s) in mq.iter().zip(signs) {
        let l = BiPoly::linear(row[0].clone(), row[1].clone(), row[2].clone());
        f = f.add(&l.pow(degree).scale(&q(s)));
    }
    let w = solve3(&mq, &v.map(q));
    assert!(!w[2].is_zero(), "model point lies at infinity");
    let pt = (&w[0] / &w[2], &w[1] / &w[2]);
    assert!(f.eval(&pt.0, &pt.1).is_zero());
    (f, pt)
}


pub fn random_point<R: Rng>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)))
        .collect()
}

/// Worst relative error of the Jacobian of `map` against central differences
/// with step `1e−5·(1 + |z_i|)`.
pub fn fd_error<M: PolyMap>(map: &M, x: &[C64]) -> f64 {
    let n = map.nvars();
    let m = map.neqs();
    let mut v = vec![C64::default(); m];
    let mut jac = vec![C64::default(); m * n];
    map.eval_jac(x, &mut v, &mut jac);
    let scale = jac.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
    let mut worst: f64 = 0.0;
    for q in 0..n {
        let h = 1e-5 * (1.0 + x[q].norm());
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[q] += h;
        xm[q] -= h;
        let mut vp = vec![C64::default(); m];
        let mut vm = vec![C64::default(); m];
        let mut scratch = vec![C64::default(); m * n];
        map.eval_jac(&xp, &mut vp, &mut scratch);
        map.eval_jac(&xm, &mut vm, &mut scratch);
        for r in 0..m {
            let fd = (vp[r] - vm[r]) / (2.0 * h);
            let err = (fd - jac[r * n + q]).norm() / scale;
            worst = worst.max(err);
        }
    }
    worst
}
