//! Sparse multivariate polynomials with double-precision complex coefficients.
//!
//! Terms are kept in a `BTreeMap` keyed by [`Monomial`], whose ordering is
//! graded lexicographic. Every traversal (evaluation, printing, arithmetic)
//! therefore visits terms in the same order, which makes floating-point
//! results reproducible bit for bit.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Exponent vector of a monomial, one entry per variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Monomial(e)
    }

    pub fn from_exponents(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Degree restricted to the variables in `range`.
    pub fn partial_degree(&self, range: std::ops::Range<usize>) -> u32 {
        self.0[range].iter().sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Evaluates the monomial as a product of integer powers.
    pub fn evaluate(&self, z: &[C64]) -> C64 {
        let mut acc = C64::new(1.0, 0.0);
        for (&e, &zi) in self.0.iter().zip(z) {
            if e > 0 {
                acc *= zi.powu(e);
            }
        }
        acc
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Monomial, C64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: C64) -> Self {
        let mut p = Polynomial::zero(nvars);
        p.add_term(Monomial::one(nvars), c);
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "variable index {i} out of range for {nvars} variables");
        let mut p = Polynomial::zero(nvars);
        p.add_term(Monomial::var(nvars, i), C64::new(1.0, 0.0));
        p
    }

    /// Affine linear form `a·z + b`.
    pub fn affine(a: &[C64], b: C64) -> Self {
        let n = a.len();
        let mut p = Polynomial::constant(n, b);
        for (i, &ai) in a.iter().enumerate() {
            p.add_term(Monomial::var(n, i), ai);
        }
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs, merging
    /// duplicates and dropping zeros.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, C64)>,
    {
        let mut p = Polynomial::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::Input(format!(
                    "monomial has {} exponents, polynomial has {} variables",
                    e.len(),
                    nvars
                )));
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::Input("non-finite coefficient".into()));
            }
            p.add_term(Monomial(e), c);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in graded lexicographic order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &C64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> C64 {
        self.terms.get(m).copied().unwrap_or_default()
    }

    /// `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    /// Largest degree in the variables of `range` over all terms.
    pub fn partial_degree(&self, range: std::ops::Range<usize>) -> Option<u32> {
        self.terms
            .keys()
            .map(|m| m.partial_degree(range.clone()))
            .max()
    }

    fn add_term(&mut self, m: Monomial, c: C64) {
        if c == C64::default() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v += c;
                if *v == C64::default() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn evaluate(&self, z: &[C64]) -> Result<C64> {
        if z.len() != self.nvars {
            return Err(Error::Input(format!(
                "point has {} coordinates, polynomial has {} variables",
                z.len(),
                self.nvars
            )));
        }
        Ok(self.eval_unchecked(z))
    }

    pub(crate) fn eval_unchecked(&self, z: &[C64]) -> C64 {
        self.terms
            .iter()
            .fold(C64::default(), |acc, (m, &c)| acc + c * m.evaluate(z))
    }

    /// `Σ |c|·|z^α|`, the natural scale against which a residual is judged.
    pub fn abs_eval(&self, z: &[C64]) -> f64 {
        self.terms.iter().fold(0.0, |acc, (m, c)| {
            let mag: f64 = m
                .0
                .iter()
                .zip(z)
                .map(|(&e, zi)| zi.norm().powi(e as i32))
                .product();
            acc + c.norm() * mag
        })
    }

    /// Value and gradient in one pass.
    pub(crate) fn eval_grad(&self, z: &[C64], grad: &mut [C64]) -> C64 {
        grad.iter_mut().for_each(|g| *g = C64::default());
        let mut value = C64::default();
        for (m, &c) in &self.terms {
            value += c * m.evaluate(z);
            for (q, &eq) in m.0.iter().enumerate() {
                if eq == 0 {
                    continue;
                }
                let mut t = c * eq as f64;
                for (r, (&er, &zr)) in m.0.iter().zip(z).enumerate() {
                    let e = if r == q { er - 1 } else { er };
                    if e > 0 {
                        t *= zr.powu(e);
                    }
                }
                grad[q] += t;
            }
        }
        value
    }

    pub fn partial_derivative(&self, i: usize) -> Result<Polynomial> {
        if i >= self.nvars {
            return Err(Error::Input(format!(
                "variable index {i} out of range for {} variables",
                self.nvars
            )));
        }
        let mut out = Polynomial::zero(self.nvars);
        for (m, &c) in &self.terms {
            let e = m.0[i];
            if e == 0 {
                continue;
            }
            let mut dm = m.clone();
            dm.0[i] -= 1;
            out.add_term(dm, c * e as f64);
        }
        Ok(out)
    }

    pub fn scale(&self, s: C64) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (m, &c) in &self.terms {
            out.add_term(m.clone(), c * s);
        }
        out
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut result = Polynomial::constant(self.nvars, C64::new(1.0, 0.0));
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Substitutes `z_i = s_i·w_i`.
    pub fn rescale_variables(&self, s: &[f64]) -> Polynomial {
        assert_eq!(s.len(), self.nvars);
        let mut out = Polynomial::zero(self.nvars);
        for (m, &c) in &self.terms {
            let factor: f64 = m.0.iter().zip(s).map(|(&e, &si)| si.powi(e as i32)).product();
            out.add_term(m.clone(), c * factor);
        }
        out
    }

    /// Divides by the largest coefficient modulus; the zero polynomial is
    /// returned unchanged.
    pub fn normalized(&self) -> Polynomial {
        let big = self.terms.values().map(|c| c.norm()).fold(0.0, f64::max);
        if big == 0.0 {
            return self.clone();
        }
        self.scale(C64::new(1.0 / big, 0.0))
    }

    /// Re-embeds into `nvars` variables, the old variable `i` becoming `offset + i`.
    pub fn embed(&self, nvars: usize, offset: usize) -> Polynomial {
        assert!(offset + self.nvars <= nvars);
        let mut out = Polynomial::zero(nvars);
        for (m, &c) in &self.terms {
            let mut e = vec![0; nvars];
            e[offset..offset + self.nvars].copy_from_slice(&m.0);
            out.add_term(Monomial(e), c);
        }
        out
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> PolyDisplay<'a> {
        PolyDisplay { poly: self, names }
    }

    fn check_same_ring(&self, other: &Polynomial) {
        assert_eq!(
            self.nvars, other.nvars,
            "polynomials live in different rings"
        );
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.check_same_ring(rhs);
        let mut out = self.clone();
        for (m, &c) in &rhs.terms {
            out.add_term(m.clone(), c);
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.check_same_ring(rhs);
        let mut out = self.clone();
        for (m, &c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.check_same_ring(rhs);
        let mut out = Polynomial::zero(self.nvars);
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(C64::new(-1.0, 0.0))
    }
}

macro_rules! forward_owned_binop {
    ($tr:ident, $method:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: Polynomial) -> Polynomial {
                (&self).$method(&rhs)
            }
        }
    };
}
forward_owned_binop!(Add, add);
forward_owned_binop!(Sub, sub);
forward_owned_binop!(Mul, mul);

/// Canonical printer. Its output is accepted by the expression parser and
/// reproduces the polynomial exactly.
pub struct PolyDisplay<'a> {
    poly: &'a Polynomial,
    names: &'a [String],
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        // highest degree first reads naturally
        for (idx, (m, c)) in self.poly.terms.iter().rev().enumerate() {
            let (negative, body) = coefficient_text(*c);
            match (idx, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let factors: Vec<String> = m
                .0
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| {
                    if e == 1 {
                        self.names[i].clone()
                    } else {
                        format!("{}^{}", self.names[i], e)
                    }
                })
                .collect();
            match (body, factors.is_empty()) {
                (None, true) => write!(f, "1")?,
                (None, false) => write!(f, "{}", factors.join("*"))?,
                (Some(b), true) => write!(f, "{b}")?,
                (Some(b), false) => write!(f, "{}*{}", b, factors.join("*"))?,
            }
        }
        Ok(())
    }
}

/// Splits a coefficient into a leading sign and its magnitude text; `None`
/// means the magnitude is exactly one.
fn coefficient_text(c: C64) -> (bool, Option<String>) {
    if c.im == 0.0 {
        let negative = c.re < 0.0;
        let mag = c.re.abs();
        if mag == 1.0 {
            (negative, None)
        } else {
            (negative, Some(format!("{mag}")))
        }
    } else if c.re == 0.0 {
        let negative = c.im < 0.0;
        let mag = c.im.abs();
        if mag == 1.0 {
            (negative, Some("i".to_string()))
        } else {
            (negative, Some(format!("{mag}*i")))
        }
    } else {
        let sign = if c.im < 0.0 { '-' } else { '+' };
        (false, Some(format!("({}{}{}*i)", c.re, sign, c.im.abs())))
    }
}

/// An ordered list of polynomials over a common set of variables.
#[derive(Clone, Debug, PartialEq)]
pub struct PolySystem {
    nvars: usize,
    equations: Vec<Polynomial>,
}

impl PolySystem {
    pub fn new(nvars: usize, equations: Vec<Polynomial>) -> Result<Self> {
        if nvars == 0 {
            return Err(Error::Input("a system needs at least one variable".into()));
        }
        if let Some(p) = equations.iter().find(|p| p.nvars() != nvars) {
            return Err(Error::Input(format!(
                "equation has {} variables, system has {}",
                p.nvars(),
                nvars
            )));
        }
        Ok(PolySystem { nvars, equations })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn equations(&self) -> &[Polynomial] {
        &self.equations
    }

    pub fn is_square(&self) -> bool {
        self.equations.len() == self.nvars
    }

    /// Entry `(j, i)` is `∂ equations[j] / ∂ z_i`.
    pub fn jacobian(&self) -> Vec<Vec<Polynomial>> {
        self.equations
            .iter()
            .map(|p| {
                (0..self.nvars)
                    .map(|i| p.partial_derivative(i).expect("index in range"))
                    .collect()
            })
            .collect()
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.equations
            .iter()
            .map(|p| p.total_degree().unwrap_or(0))
            .collect()
    }

    /// Rescales variables by `z_i = s_i·w_i` and normalizes every equation.
    pub fn rescaled(&self, s: &[f64]) -> PolySystem {
        PolySystem {
            nvars: self.nvars,
            equations: self
                .equations
                .iter()
                .map(|p| p.rescale_variables(s).normalized())
                .collect(),
        }
    }

    pub fn evaluate(&self, z: &[C64]) -> Result<Vec<C64>> {
        self.equations.iter().map(|p| p.evaluate(z)).collect()
    }
}

/// Flattened term list for repeated evaluation against a [`PowerTable`].
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    coeffs: Vec<C64>,
    starts: Vec<usize>,
    factors: Vec<(usize, usize)>,
}

impl CompiledPoly {
    pub fn new(p: &Polynomial) -> Self {
        let mut coeffs = Vec::with_capacity(p.num_terms());
        let mut starts = vec![0];
        let mut factors = Vec::new();
        for (m, &c) in p.terms() {
            coeffs.push(c);
            for (q, &e) in m.exponents().iter().enumerate() {
                if e > 0 {
                    factors.push((q, e as usize));
                }
            }
            starts.push(factors.len());
        }
        CompiledPoly {
            coeffs,
            starts,
            factors,
        }
    }

    pub fn eval(&self, pow: &PowerTable) -> C64 {
        let mut acc = C64::default();
        for (t, &c) in self.coeffs.iter().enumerate() {
            let mut v = c;
            for &(q, e) in &self.factors[self.starts[t]..self.starts[t + 1]] {
                v *= pow.get(q, e);
            }
            acc += v;
        }
        acc
    }
}

/// `z_q^e` for every variable and every exponent up to a fixed bound.
#[derive(Clone, Debug)]
pub struct PowerTable {
    width: usize,
    table: Vec<C64>,
}

impl PowerTable {
    pub fn new(nvars: usize, max_exp: usize) -> Self {
        PowerTable {
            width: max_exp + 1,
            table: vec![C64::new(1.0, 0.0); nvars * (max_exp + 1)],
        }
    }

    pub fn fill(&mut self, z: &[C64]) {
        for (q, &zq) in z.iter().enumerate() {
            let row = &mut self.table[q * self.width..(q + 1) * self.width];
            row[0] = C64::new(1.0, 0.0);
            for e in 1..row.len() {
                row[e] = row[e - 1] * zq;
            }
        }
    }

    #[inline]
    pub fn get(&self, q: usize, e: usize) -> C64 {
        self.table[q * self.width + e]
    }
}

/// Convenience for tests and small systems: evaluate then return the max
/// modulus.
pub fn max_modulus(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}
