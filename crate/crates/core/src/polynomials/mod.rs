//! Multivariate polynomials over F_p with per-variable exponents below p.

mod rank;

pub use rank::{rank, rank_of_set, rank_with, RankCertificate, RankKind, RankMethod, RankReport};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimate::{ComplexMoments, Estimate, Mode};
use crate::field::{self, FpVector, PrimeField, Space};
use crate::par;

/// A polynomial in `n` variables. Terms map exponent vectors to nonzero coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    field: PrimeField,
    n: usize,
    terms: BTreeMap<Vec<u8>, u8>,
}

impl Polynomial {
    /// Builds a polynomial from `(exponents, coefficient)` pairs, summing repeats.
    pub fn new<I>(field: PrimeField, n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u8>, u8)>,
    {
        let mut poly = Self::zero(field, n);
        for (exps, coeff) in terms {
            if exps.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: exps.len() });
            }
            if let Some(e) = exps.iter().find(|&&e| e as u32 >= field.p()) {
                return invalid(format!("exponent {e} must be below p={}", field.p()));
            }
            poly.add_term(exps, field.reduce(coeff as i64));
        }
        Ok(poly)
    }

    pub fn zero(field: PrimeField, n: usize) -> Self {
        Self { field, n, terms: BTreeMap::new() }
    }

    pub fn constant(field: PrimeField, n: usize, c: u8) -> Self {
        let mut poly = Self::zero(field, n);
        poly.add_term(vec![0; n], field.reduce(c as i64));
        poly
    }

    /// The coordinate function x_i (0-based `i`).
    pub fn variable(field: PrimeField, n: usize, i: usize) -> Self {
        let mut exps = vec![0; n];
        exps[i] = 1;
        let mut poly = Self::zero(field, n);
        poly.add_term(exps, 1);
        poly
    }

    /// The linear form sum_i a(i) x_i.
    pub fn linear(field: PrimeField, a: &[u8]) -> Self {
        let n = a.len();
        let mut poly = Self::zero(field, n);
        for (i, &c) in a.iter().enumerate() {
            let mut exps = vec![0; n];
            exps[i] = 1;
            poly.add_term(exps, c);
        }
        poly
    }

    fn add_term(&mut self, exps: Vec<u8>, coeff: u8) {
        if coeff == 0 {
            return;
        }
        let f = self.field;
        let entry = self.terms.entry(exps).or_insert(0);
        *entry = f.add(*entry, coeff);
        if *entry == 0 {
            let key: Vec<Vec<u8>> = self.terms.iter().filter(|(_, &c)| c == 0).map(|(k, _)| k.clone()).collect();
            for k in key {
                self.terms.remove(&k);
            }
        }
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn p(&self) -> u32 {
        self.field.p()
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u8>, u8)> {
        self.terms.iter().map(|(e, &c)| (e, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; the zero polynomial has degree -1.
    pub fn degree(&self) -> i32 {
        self.terms.keys().map(|e| total_degree(e) as i32).max().unwrap_or(-1)
    }

    /// True iff every term has total degree equal to `degree()` (vacuous for zero).
    pub fn is_homogeneous(&self) -> bool {
        let d = self.degree();
        self.terms.keys().all(|e| total_degree(e) as i32 == d)
    }

    /// Homogeneous part of degree exactly `d`.
    pub fn homogeneous_part(&self, d: u32) -> Polynomial {
        Polynomial {
            field: self.field,
            n: self.n,
            terms: self.terms.iter().filter(|(e, _)| total_degree(e) == d).map(|(e, &c)| (e.clone(), c)).collect(),
        }
    }

    pub fn evaluate(&self, x: &FpVector) -> Result<u8> {
        if x.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.dim() });
        }
        Ok(self.eval_coords(&x.coords))
    }

    /// Evaluation at raw coordinates (length is the caller's responsibility).
    pub fn eval_coords(&self, x: &[u8]) -> u8 {
        let f = self.field;
        let p = f.p() as usize;
        // powers[i][e] = x_i^e
        let mut acc = 0u8;
        let mut pw = vec![1u8; p];
        let mut powers: Vec<Vec<u8>> = Vec::with_capacity(self.n);
        for &xi in x {
            pw[0] = 1;
            for e in 1..p {
                pw[e] = f.mul(pw[e - 1], xi);
            }
            powers.push(pw.clone());
        }
        for (exps, &c) in &self.terms {
            let mono = exps.iter().enumerate().fold(c, |m, (i, &e)| f.mul(m, powers[i][e as usize]));
            acc = f.add(acc, mono);
        }
        acc
    }

    /// Values at every point of F_p^n in enumeration order.
    pub fn to_table(&self) -> Result<Vec<u8>> {
        let space = Space::new(self.field, self.n)?;
        let chunk = 4096usize;
        let chunks = space.size().div_ceil(chunk);
        let parts = par::map_indexed(chunks, |c| {
            let mut x = vec![0u8; self.n];
            (c * chunk..((c + 1) * chunk).min(space.size()))
                .map(|i| {
                    space.digits_into(i, &mut x);
                    self.eval_coords(&x)
                })
                .collect::<Vec<u8>>()
        });
        Ok(parts.concat())
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.add_term(e.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.add(&other.scale(self.field.neg(1)))
    }

    pub fn scale(&self, c: u8) -> Polynomial {
        let f = self.field;
        let mut out = Polynomial::zero(f, self.n);
        for (e, &a) in &self.terms {
            out.add_term(e.clone(), f.mul(a, c));
        }
        out
    }

    /// Product, reducing x^p to x so exponents stay below p.
    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_compatible(other)?;
        let f = self.field;
        let p = f.p() as u8;
        let mut out = Polynomial::zero(f, self.n);
        for (e1, &c1) in &self.terms {
            for (e2, &c2) in &other.terms {
                let exps = e1
                    .iter()
                    .zip(e2)
                    .map(|(&a, &b)| {
                        let s = a + b;
                        if s >= p {
                            s - (p - 1)
                        } else {
                            s
                        }
                    })
                    .collect();
                out.add_term(exps, f.mul(c1, c2));
            }
        }
        Ok(out)
    }

    fn check_compatible(&self, other: &Polynomial) -> Result<()> {
        if self.field != other.field {
            return invalid("polynomials over different fields");
        }
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        Ok(())
    }

    /// The additive derivative x -> P(x + y) - P(x), expanded symbolically.
    pub fn additive_derivative(&self, y: &FpVector) -> Result<Polynomial> {
        if y.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: y.dim() });
        }
        let f = self.field;
        let mut shifted = Polynomial::zero(f, self.n);
        for (exps, &c) in &self.terms {
            // Expand prod_i (x_i + y_i)^{e_i} one variable at a time.
            let mut partial: Vec<(Vec<u8>, u8)> = vec![(vec![0; self.n], c)];
            for (i, &e) in exps.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let yi = y.coords[i];
                let mut next = Vec::with_capacity(partial.len() * (e as usize + 1));
                for (pe, pc) in &partial {
                    for j in 0..=e {
                        let coef = f.mul(f.binomial(e as u32, j as u32), f.pow(yi, (e - j) as u32));
                        if coef == 0 {
                            continue;
                        }
                        let mut ne = pe.clone();
                        ne[i] = j;
                        next.push((ne, f.mul(*pc, coef)));
                    }
                }
                partial = next;
            }
            for (e, c) in partial {
                shifted.add_term(e, c);
            }
        }
        shifted.sub(self)
    }

    /// Recovers the unique polynomial with exponents below p that takes the
    /// given values on F_p^n (values in enumeration order).
    pub fn interpolate(field: PrimeField, n: usize, values: &[u8]) -> Result<Polynomial> {
        let space = Space::new(field, n)?;
        if values.len() != space.size() {
            return Err(Error::DimensionMismatch { expected: space.size(), got: values.len() });
        }
        let p = field.p() as usize;
        let vinv = inverse_vandermonde(field);
        let mut coef: Vec<u8> = values.iter().map(|&v| field.reduce(v as i64)).collect();
        // Apply the inverse Vandermonde transform along every axis.
        let mut stride = 1usize;
        let mut line = vec![0u8; p];
        for _axis in 0..n {
            let block = stride * p;
            for base in (0..space.size()).step_by(block) {
                for off in 0..stride {
                    for (t, slot) in line.iter_mut().enumerate() {
                        *slot = coef[base + off + t * stride];
                    }
                    for j in 0..p {
                        let v = (0..p).fold(0u8, |acc, t| field.add(acc, field.mul(vinv[j][t], line[t])));
                        coef[base + off + j * stride] = v;
                    }
                }
            }
            stride = block;
        }
        let mut poly = Polynomial::zero(field, n);
        for (idx, &c) in coef.iter().enumerate() {
            if c != 0 {
                poly.add_term(space.vector(idx).coords, c);
            }
        }
        Ok(poly)
    }

    /// The polynomial x -> P(Ax) for an affine map A.
    pub fn compose_affine(&self, map: &field::AffineMap) -> Result<Polynomial> {
        let space = Space::new(self.field, self.n)?;
        let table = self.to_table()?;
        let perm = map.permutation(&space)?;
        let composed: Vec<u8> = perm.iter().map(|&j| table[j]).collect();
        Polynomial::interpolate(self.field, self.n, &composed)
    }
}

fn total_degree(exps: &[u8]) -> u32 {
    exps.iter().map(|&e| e as u32).sum()
}

/// Inverse of the Vandermonde matrix V[t][j] = t^j over F_p.
fn inverse_vandermonde(field: PrimeField) -> Vec<Vec<u8>> {
    let p = field.p() as usize;
    let v: Vec<Vec<u8>> = (0..p).map(|t| (0..p).map(|j| field.pow(t as u8, j as u32)).collect()).collect();
    crate::linalg::inverse(field, &v).expect("Vandermonde matrix on distinct nodes is invertible")
}

/// Exponent vectors with entries below p and total degree <= `max_degree`
/// (or exactly `max_degree` when `exact`), in lexicographic order.
pub fn monomials(field: PrimeField, n: usize, max_degree: u32, exact: bool) -> Vec<Vec<u8>> {
    let p = field.p() as u8;
    let mut out = Vec::new();
    let mut cur = vec![0u8; n];
    fn rec(i: usize, left: u32, p: u8, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>, exact: bool, max: u32) {
        if i == cur.len() {
            if !exact || total_degree(cur) == max {
                out.push(cur.clone());
            }
            return;
        }
        for e in 0..p.min((left + 1).min(255) as u8) {
            cur[i] = e;
            rec(i + 1, left - e as u32, p, cur, out, exact, max);
        }
        cur[i] = 0;
    }
    rec(0, max_degree, p, &mut cur, &mut out, exact, max_degree);
    out
}

/// Random polynomial of degree exactly `d`. Any degree up to n(p-1) is
/// accepted; over F_2 that includes the multilinear quadratics and cubics.
///
/// Coefficients are uniform on the
/// monomial basis (degree <= d, or exactly d when `homogeneous`).
pub fn random_polynomial_with<R: Rng + ?Sized>(
    field: PrimeField,
    n: usize,
    d: u32,
    homogeneous: bool,
    rng: &mut R,
) -> Result<Polynomial> {
    let max_degree = n as u32 * (field.p() - 1);
    if d > max_degree {
        return invalid(format!("degree {d} exceeds the largest degree {max_degree} of a polynomial on F_{}^{n}", field.p()));
    }
    let basis = monomials(field, n, d, homogeneous);
    loop {
        let poly = Polynomial::new(
            field,
            n,
            basis.iter().map(|e| (e.clone(), rng.random_range(0..field.p()) as u8)),
        )?;
        if poly.degree() == d as i32 {
            return Ok(poly);
        }
    }
}

/// Seeded [`random_polynomial_with`].
pub fn random_polynomial(p: u32, n: usize, d: u32, homogeneous: bool, seed: u64) -> Result<Polynomial> {
    let field = PrimeField::new(p)?;
    random_polynomial_with(field, n, d, homogeneous, &mut field::rng_from_seed(seed))
}

/// bias(P) = |E_X e_p(P(X))|.
pub fn bias(poly: &Polynomial, mode: Mode) -> Result<Estimate<f64>> {
    mode.validate()?;
    let field = poly.field();
    let roots = field.roots();
    match mode {
        Mode::Exact => {
            let table = poly.to_table()?;
            let mut counts = vec![0u64; field.p() as usize];
            for v in table {
                counts[v as usize] += 1;
            }
            let total = counts.iter().sum::<u64>() as f64;
            let s = par::complex_sum(counts.iter().zip(&roots).map(|(&c, &r)| r * c as f64));
            Ok(Estimate::exact(s.norm() / total))
        }
        Mode::MonteCarlo { samples, seed } => {
            let mut rng = field::rng_from_seed(seed);
            let mut mom = ComplexMoments::default();
            let mut x = vec![0u8; poly.num_vars()];
            for _ in 0..samples {
                for xi in x.iter_mut() {
                    *xi = rng.random_range(0..field.p()) as u8;
                }
                mom.push(roots[poly.eval_coords(&x) as usize]);
            }
            Ok(Estimate { value: mom.mean().norm(), std_error: Some(mom.std_error()), mode })
        }
    }
}

impl fmt::Display for Polynomial {
    /// Prints `c*x1^a1*x2^a2 + ...`, terms in descending exponent order.
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(out, "0");
        }
        let mut first = true;
        for (exps, c) in self.terms.iter().rev() {
            if !first {
                write!(out, " + ")?;
            }
            first = false;
            write!(out, "{c}")?;
            for (i, &e) in exps.iter().enumerate() {
                if e > 0 {
                    write!(out, "*x{}^{}", i + 1, e)?;
                }
            }
        }
        Ok(())
    }
}

impl Polynomial {
    /// Parses the text form `c1*x1^a1*x2^a2 + ...`. Coefficients default to 1,
    /// exponents to 1; variables are 1-based.
    pub fn parse(field: PrimeField, n: usize, text: &str) -> Result<Polynomial> {
        let mut poly = Polynomial::zero(field, n);
        let text = text.trim();
        if text.is_empty() {
            return Err(Error::Parse("empty polynomial".into()));
        }
        for term in text.split('+') {
            let term = term.trim();
            if term.is_empty() {
                return Err(Error::Parse("empty term".into()));
            }
            let mut coeff = 1u8;
            let mut exps = vec![0u8; n];
            for factor in term.split('*') {
                let factor = factor.trim();
                if let Some(var) = factor.strip_prefix('x') {
                    let (idx, exp) = match var.split_once('^') {
                        Some((i, e)) => (i.trim(), e.trim()),
                        None => (var, "1"),
                    };
                    let idx: usize = idx.parse().map_err(|_| Error::Parse(format!("bad variable '{factor}'")))?;
                    if idx == 0 || idx > n {
                        return Err(Error::Parse(format!("variable x{idx} out of range 1..={n}")));
                    }
                    let exp: u32 = exp.parse().map_err(|_| Error::Parse(format!("bad exponent in '{factor}'")))?;
                    let total = exps[idx - 1] as u32 + exp;
                    if total >= field.p() {
                        return Err(Error::Parse(format!("exponent of x{idx} must be below p={}", field.p())));
                    }
                    exps[idx - 1] = total as u8;
                } else {
                    let c: u64 = factor.parse().map_err(|_| Error::Parse(format!("bad coefficient '{factor}'")))?;
                    coeff = field.mul(coeff, (c % field.p() as u64) as u8);
                }
            }
            poly.add_term(exps, coeff);
        }
        Ok(poly)
    }
}

impl FromStr for PolynomialJson {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// JSON form `{p, n, terms: [{exps, coeff}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialJson {
    pub p: u32,
    pub n: usize,
    pub terms: Vec<TermJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub exps: Vec<u8>,
    pub coeff: u8,
}

impl From<&Polynomial> for PolynomialJson {
    fn from(p: &Polynomial) -> Self {
        PolynomialJson {
            p: p.p(),
            n: p.n,
            terms: p.terms.iter().map(|(e, &c)| TermJson { exps: e.clone(), coeff: c }).collect(),
        }
    }
}

impl TryFrom<PolynomialJson> for Polynomial {
    type Error = Error;
    fn try_from(j: PolynomialJson) -> Result<Self> {
        let field = PrimeField::new(j.p)?;
        if let Some(t) = j.terms.iter().find(|t| t.coeff as u32 >= j.p) {
            return invalid(format!("coefficient {} must be below p={}", t.coeff, j.p));
        }
        Polynomial::new(field, j.n, j.terms.into_iter().map(|t| (t.exps, t.coeff)))
    }
}

impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolynomialJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = PolynomialJson::deserialize(d)?;
        Polynomial::try_from(j).map_err(serde::de::Error::custom)
    }
}
