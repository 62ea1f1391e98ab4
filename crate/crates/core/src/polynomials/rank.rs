//! Rank of polynomials: can P be written as Γ(Q_1..Q_r) with deg Q_i < deg P?
//!
//! Two exact paths: an exhaustive search over tuples of lower-degree
//! polynomials on tiny spaces, and a closed form for quadratics. Anything else
//! yields a lower bound only.

use serde::{Deserialize, Serialize};

use super::{monomials, Polynomial};
use crate::error::{invalid, Result};
use crate::field::{pow_u128, PrimeField, Space};
use crate::linalg;
use crate::par;

/// Coefficient vectors and value tables of candidate lower-degree polynomials.
type Candidates = (Vec<Vec<u8>>, Vec<Vec<u8>>);

/// Largest p^n the exhaustive search accepts.
pub const EXHAUSTIVE_MAX_POINTS: usize = 64;
/// Largest r the exhaustive search tries.
pub const EXHAUSTIVE_MAX_R: usize = 2;
/// Cap on (candidate tuples) x (points) for one exhaustive level.
const EXHAUSTIVE_WORK: u128 = 1 << 27;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankKind {
    ExactExhaustive,
    QuadraticClosedForm,
    LowerBoundOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankMethod {
    Auto,
    Exhaustive,
    QuadraticClosedForm,
}

/// A decomposition P = Γ(Q_1, .., Q_r). `gamma` is indexed by the label
/// (Q_1(x), .., Q_r(x)) read as a base-p integer, most significant first;
/// labels that never occur map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankCertificate {
    pub polynomials: Vec<Polynomial>,
    pub gamma: Vec<u8>,
}

impl RankCertificate {
    /// Checks that Γ(Q_1..Q_r) reproduces `target` on every point.
    pub fn verify(&self, target: &Polynomial) -> Result<bool> {
        let table = target.to_table()?;
        let tables = self.polynomials.iter().map(Polynomial::to_table).collect::<Result<Vec<_>>>()?;
        let p = target.p() as usize;
        Ok((0..table.len()).all(|x| {
            let label = tables.iter().fold(0usize, |acc, t| acc * p + t[x] as usize);
            self.gamma[label] == table[x]
        }))
    }
}

/// Verified rank boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub rank_kind: RankKind,
    /// Largest r <= r_max for which rank > r was verified.
    pub exceeds: Option<usize>,
    /// Smallest r for which a decomposition was found (rank <= r).
    pub at_most: Option<usize>,
    pub certificate: Option<RankCertificate>,
}

impl RankReport {
    /// The rank, when both sides of the boundary are pinned down.
    pub fn value(&self) -> Option<usize> {
        match (self.exceeds, self.at_most) {
            (None, Some(0)) => Some(0),
            (Some(lo), Some(hi)) if lo + 1 == hi => Some(hi),
            _ => None,
        }
    }

    /// Whether rank > r is verified.
    pub fn exceeds_verified(&self, r: usize) -> bool {
        self.exceeds.is_some_and(|lo| r <= lo)
    }
}

/// Rank of a single polynomial, relative to degree deg(P) - 1.
pub fn rank(poly: &Polynomial, r_max: usize) -> Result<RankReport> {
    rank_with(poly, r_max, RankMethod::Auto)
}

pub fn rank_with(poly: &Polynomial, r_max: usize, method: RankMethod) -> Result<RankReport> {
    rank_relative(poly, poly.degree().max(0) as u32, r_max, method)
}

/// Rank of a set: the minimum over nonzero combinations P_α, each measured
/// against degree max{deg P_j : α_j != 0} - 1. Scalar multiples share a rank,
/// so only α with leading nonzero entry 1 are visited.
pub fn rank_of_set(polys: &[Polynomial], r_max: usize) -> Result<RankReport> {
    let Some(first) = polys.first() else {
        return invalid("rank of an empty set");
    };
    let field = first.field();
    let p = field.p() as usize;
    let t = polys.len();
    let combos = pow_u128(p as u64, t);
    if combos > 1 << 16 {
        return invalid(format!("{combos} combinations is too many"));
    }
    let mut best: Option<RankReport> = None;
    for idx in 1..combos as usize {
        let mut alpha = vec![0u8; t];
        let mut rest = idx;
        for a in alpha.iter_mut().rev() {
            *a = (rest % p) as u8;
            rest /= p;
        }
        if alpha.iter().find(|&&a| a != 0) != Some(&1) {
            continue;
        }
        let mut combo = Polynomial::zero(field, first.num_vars());
        let mut d = 0u32;
        for (poly, &a) in polys.iter().zip(&alpha) {
            if a != 0 {
                combo = combo.add(&poly.scale(a))?;
                d = d.max(poly.degree().max(0) as u32);
            }
        }
        let report = rank_relative(&combo, d, r_max, RankMethod::Auto)?;
        best = Some(match best {
            None => report,
            Some(b) => merge_min(b, report),
        });
    }
    Ok(best.expect("at least one nonzero combination"))
}

fn merge_min(a: RankReport, b: RankReport) -> RankReport {
    let exceeds = match (a.exceeds, b.exceeds) {
        (Some(x), Some(y)) => Some(x.min(y)),
        _ => None,
    };
    let (at_most, certificate) = match (a.at_most, b.at_most) {
        (Some(x), Some(y)) if y < x => (Some(y), b.certificate),
        (Some(x), _) => (Some(x), a.certificate),
        (None, y) => (y, b.certificate),
    };
    let rank_kind = if a.rank_kind == RankKind::LowerBoundOnly || b.rank_kind == RankKind::LowerBoundOnly {
        RankKind::LowerBoundOnly
    } else if a.rank_kind == RankKind::ExactExhaustive || b.rank_kind == RankKind::ExactExhaustive {
        RankKind::ExactExhaustive
    } else {
        RankKind::QuadraticClosedForm
    };
    RankReport { rank_kind, exceeds, at_most, certificate }
}

/// Rank of `poly` with respect to polynomials of degree <= d - 1.
fn rank_relative(poly: &Polynomial, d: u32, r_max: usize, method: RankMethod) -> Result<RankReport> {
    let deg = poly.degree();
    // Constants are functions of nothing; anything of degree < d is a
    // function of itself.
    if deg <= 0 {
        return Ok(RankReport {
            rank_kind: RankKind::ExactExhaustive,
            exceeds: None,
            at_most: Some(0),
            certificate: Some(RankCertificate {
                polynomials: vec![],
                gamma: vec![poly.terms().next().map_or(0, |(_, c)| c)],
            }),
        });
    }
    if (deg as u32) < d {
        let p = poly.p() as usize;
        return Ok(RankReport {
            rank_kind: RankKind::ExactExhaustive,
            exceeds: Some(0),
            at_most: Some(1),
            certificate: Some(RankCertificate { polynomials: vec![poly.clone()], gamma: (0..p as u8).collect() }),
        });
    }
    let small = poly.num_vars() <= 64 && pow_u128(poly.p() as u64, poly.num_vars()) <= EXHAUSTIVE_MAX_POINTS as u128;
    match method {
        RankMethod::QuadraticClosedForm => quadratic_rank(poly, r_max),
        RankMethod::Exhaustive => exhaustive_rank(poly, d, r_max),
        RankMethod::Auto if d == 2 => quadratic_rank(poly, r_max),
        RankMethod::Auto if small => exhaustive_rank(poly, d, r_max),
        RankMethod::Auto => Ok(RankReport { rank_kind: RankKind::LowerBoundOnly, exceeds: Some(0), at_most: None, certificate: None }),
    }
}

/// Closed form for quadratics. P is a function of linear forms ℓ_1..ℓ_r iff it
/// is invariant under translation by W = ∩ ker ℓ_i, so the rank is n − dim of
/// {v : Δ_v P ≡ 0}. That set is ker(M) ∩ ker(φ) where M is the matrix of the
/// bilinear part and φ(v) = P(v) − P(0), which is linear on ker(M).
fn quadratic_rank(poly: &Polynomial, r_max: usize) -> Result<RankReport> {
    if poly.degree() != 2 {
        return invalid("quadratic closed form needs a degree-2 polynomial");
    }
    let field = poly.field();
    let n = poly.num_vars();
    let mut m = vec![vec![0u8; n]; n];
    for (exps, c) in poly.terms() {
        let vars: Vec<usize> = exps.iter().enumerate().flat_map(|(i, &e)| std::iter::repeat_n(i, e as usize)).collect();
        if let [i, j] = vars[..] {
            if i == j {
                m[i][i] = field.add(m[i][i], field.mul(2 % field.p() as u8, c));
            } else {
                m[i][j] = field.add(m[i][j], c);
                m[j][i] = field.add(m[j][i], c);
            }
        }
    }
    let kernel = linalg::nullspace(field, &m, n);
    let c0 = poly.eval_coords(&vec![0; n]);
    let phi_nonzero = kernel.iter().any(|v| poly.eval_coords(v) != c0);
    let invariant_dim = kernel.len() - usize::from(phi_nonzero);
    let r = n - invariant_dim;

    // Certificate: Q_i span the annihilator of the invariant subspace.
    let invariant = if phi_nonzero {
        let phi: Vec<u8> = kernel.iter().map(|v| field.sub(poly.eval_coords(v), c0)).collect();
        linalg::nullspace(field, &[phi], kernel.len())
            .iter()
            .map(|coef| combine_rows(field, &kernel, coef, n))
            .collect()
    } else {
        kernel
    };
    let forms = if invariant.is_empty() {
        (0..n).map(|i| {
            let mut e = vec![0u8; n];
            e[i] = 1;
            e
        }).collect()
    } else {
        linalg::nullspace(field, &invariant, n)
    };
    debug_assert_eq!(forms.len(), r);
    let certificate = match Space::new(field, n) {
        Ok(_) => {
            let qs: Vec<Polynomial> = forms.iter().map(|a| Polynomial::linear(field, a)).collect();
            Some(build_certificate(poly, qs)?)
        }
        Err(_) => None,
    };
    Ok(RankReport {
        rank_kind: RankKind::QuadraticClosedForm,
        exceeds: if r == 0 { None } else { Some((r - 1).min(r_max)) },
        at_most: Some(r),
        certificate,
    })
}

fn combine_rows(field: PrimeField, rows: &[Vec<u8>], coef: &[u8], n: usize) -> Vec<u8> {
    let mut out = vec![0u8; n];
    for (row, &c) in rows.iter().zip(coef) {
        for (o, &x) in out.iter_mut().zip(row) {
            *o = field.add(*o, field.mul(c, x));
        }
    }
    out
}

/// Tabulates Γ from the Q's; errors if P is not a function of them.
fn build_certificate(poly: &Polynomial, qs: Vec<Polynomial>) -> Result<RankCertificate> {
    let p = poly.p() as usize;
    let table = poly.to_table()?;
    let tables = qs.iter().map(Polynomial::to_table).collect::<Result<Vec<_>>>()?;
    let mut gamma = vec![u8::MAX; p.pow(qs.len() as u32)];
    for (x, &v) in table.iter().enumerate() {
        let label = tables.iter().fold(0usize, |acc, t| acc * p + t[x] as usize);
        if gamma[label] != u8::MAX && gamma[label] != v {
            return Err(crate::error::Error::Internal("rank certificate is not a function".into()));
        }
        gamma[label] = v;
    }
    for g in gamma.iter_mut().filter(|g| **g == u8::MAX) {
        *g = 0;
    }
    Ok(RankCertificate { polynomials: qs, gamma })
}

/// Exhaustive search over r-subsets of nonconstant degree-(d−1) polynomials,
/// taken up to additive constants and nonzero scalars (neither changes the
/// partition into level sets).
fn exhaustive_rank(poly: &Polynomial, d: u32, r_max: usize) -> Result<RankReport> {
    let field = poly.field();
    let n = poly.num_vars();
    let space = Space::new(field, n)?;
    if space.size() > EXHAUSTIVE_MAX_POINTS {
        return invalid(format!("exhaustive rank needs p^n <= {EXHAUSTIVE_MAX_POINTS}"));
    }
    let p = field.p() as usize;
    let target = poly.to_table()?;
    let basis: Vec<Vec<u8>> = monomials(field, n, d.saturating_sub(1), false)
        .into_iter()
        .filter(|e| e.iter().any(|&x| x > 0))
        .collect();
    let n_cands = if basis.is_empty() { 0 } else { (pow_u128(p as u64, basis.len()) - 1) / (p as u128 - 1) };

    let mut exceeds = None;
    let r_cap = r_max.min(EXHAUSTIVE_MAX_R);
    let mut cands: Option<Candidates> = None;
    for r in 0..=r_cap {
        if r > 0 {
            let tuples = binomial_u128(n_cands, r);
            if n_cands > 1 << 16 || tuples.saturating_mul(space.size() as u128) > EXHAUSTIVE_WORK {
                return Ok(RankReport { rank_kind: RankKind::LowerBoundOnly, exceeds, at_most: None, certificate: None });
            }
        }
        let (coefs, tables) = cands.get_or_insert_with(|| candidates(field, &space, &basis));
        if let Some(choice) = find_decomposition(&target, tables, r, p) {
            let qs: Vec<Polynomial> = choice
                .iter()
                .map(|&i| Polynomial::new(field, n, basis.iter().cloned().zip(coefs[i].iter().copied())))
                .collect::<Result<_>>()?;
            return Ok(RankReport {
                rank_kind: RankKind::ExactExhaustive,
                exceeds,
                at_most: Some(r),
                certificate: Some(build_certificate(poly, qs)?),
            });
        }
        exceeds = Some(r);
    }
    let kind = if r_max > EXHAUSTIVE_MAX_R { RankKind::LowerBoundOnly } else { RankKind::ExactExhaustive };
    Ok(RankReport { rank_kind: kind, exceeds, at_most: None, certificate: None })
}

fn binomial_u128(n: u128, r: usize) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..r as u128 {
        if n < i {
            return 0;
        }
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Normalized coefficient vectors (first nonzero entry 1) and their tables.
fn candidates(field: PrimeField, space: &Space, basis: &[Vec<u8>]) -> (Vec<Vec<u8>>, Vec<Vec<u8>>) {
    let p = field.p() as usize;
    let mono_tables: Vec<Vec<u8>> = basis
        .iter()
        .map(|e| {
            let m = Polynomial::new(field, space.n, [(e.clone(), 1)]).expect("valid monomial");
            m.to_table().expect("space within budget")
        })
        .collect();
    let mut coefs = Vec::new();
    let mut tables = Vec::new();
    let total = p.pow(basis.len() as u32);
    for idx in 1..total {
        let mut c = vec![0u8; basis.len()];
        let mut rest = idx;
        for slot in c.iter_mut().rev() {
            *slot = (rest % p) as u8;
            rest /= p;
        }
        if c.iter().find(|&&x| x != 0) != Some(&1) {
            continue;
        }
        let mut t = vec![0u8; space.size()];
        for (mt, &a) in mono_tables.iter().zip(&c) {
            if a != 0 {
                for (ti, &mi) in t.iter_mut().zip(mt) {
                    *ti = field.add(*ti, field.mul(a, mi));
                }
            }
        }
        coefs.push(c);
        tables.push(t);
    }
    (coefs, tables)
}

fn is_function_of(target: &[u8], tables: &[&Vec<u8>], p: usize, scratch: &mut [u8]) -> bool {
    scratch.fill(u8::MAX);
    for (x, &v) in target.iter().enumerate() {
        let label = tables.iter().fold(0usize, |acc, t| acc * p + t[x] as usize);
        match scratch[label] {
            u8::MAX => scratch[label] = v,
            w if w != v => return false,
            _ => {}
        }
    }
    true
}

fn find_decomposition(target: &[u8], tables: &[Vec<u8>], r: usize, p: usize) -> Option<Vec<usize>> {
    let mut scratch = vec![0u8; p.pow(r as u32)];
    match r {
        0 => is_function_of(target, &[], p, &mut scratch).then(Vec::new),
        1 => (0..tables.len()).find(|&i| is_function_of(target, &[&tables[i]], p, &mut scratch)).map(|i| vec![i]),
        _ => {
            // Parallel over the first index; lowest hit wins for determinism.
            let hits = par::map_indexed(tables.len(), |i| {
                let mut scratch = vec![0u8; p.pow(r as u32)];
                first_tuple_from(target, tables, r, p, i, &mut scratch)
            });
            hits.into_iter().flatten().next()
        }
    }
}

fn first_tuple_from(target: &[u8], tables: &[Vec<u8>], r: usize, p: usize, first: usize, scratch: &mut [u8]) -> Option<Vec<usize>> {
    let mut idx: Vec<usize> = (0..r).map(|j| first + j).collect();
    if idx[r - 1] >= tables.len() {
        return None;
    }
    loop {
        let chosen: Vec<&Vec<u8>> = idx.iter().map(|&i| &tables[i]).collect();
        if is_function_of(target, &chosen, p, scratch) {
            return Some(idx);
        }
        // Advance positions 1..r, keeping position 0 fixed.
        let mut j = r - 1;
        loop {
            if j == 0 {
                return None;
            }
            if idx[j] + (r - j) < tables.len() {
                idx[j] += 1;
                for t in j + 1..r {
                    idx[t] = idx[t - 1] + 1;
                }
                break;
            }
            j -= 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u32) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn x1x2_over_f2_has_rank_two() {
        let poly = Polynomial::parse(f(2), 2, "x1*x2").unwrap();
        let rep = rank_with(&poly, 2, RankMethod::Exhaustive).unwrap();
        assert_eq!(rep.rank_kind, RankKind::ExactExhaustive);
        assert!(rep.exceeds_verified(1));
        assert!(!rep.exceeds_verified(2));
        assert_eq!(rep.value(), Some(2));
        let cert = rep.certificate.unwrap();
        assert!(cert.verify(&poly).unwrap());
        // Γ(a, b) = ab with Q = (x1, x2).
        assert_eq!(cert.polynomials, vec![Polynomial::variable(f(2), 2, 0), Polynomial::variable(f(2), 2, 1)]);
        assert_eq!(cert.gamma, vec![0, 0, 0, 1]);
    }

    #[test]
    fn nonzero_linear_exceeds_every_tested_r() {
        let poly = Polynomial::parse(f(3), 2, "x1 + 2*x2").unwrap();
        let rep = rank(&poly, 2).unwrap();
        assert_eq!(rep.exceeds, Some(2));
        assert!(rep.at_most.is_none());
    }

    #[test]
    fn constant_has_rank_zero() {
        let rep = rank(&Polynomial::constant(f(3), 2, 1), 2).unwrap();
        assert_eq!(rep.value(), Some(0));
    }

    #[test]
    fn closed_form_agrees_with_exhaustive_on_small_quadratics() {
        for p in [2u32, 3] {
            let n = if p == 2 { 3 } else { 2 };
            for seed in 0..40 {
                let poly = super::super::random_polynomial(p, n, 2, false, seed).unwrap();
                let quad = rank_with(&poly, 3, RankMethod::QuadraticClosedForm).unwrap();
                let exh = rank_with(&poly, 2, RankMethod::Exhaustive).unwrap();
                let cert = quad.certificate.as_ref().unwrap();
                assert!(cert.verify(&poly).unwrap());
                let q = quad.at_most.unwrap();
                // The exhaustive search stops at r = 2.
                if q <= 2 {
                    assert_eq!(exh.value(), Some(q), "{poly}");
                } else {
                    assert_eq!(exh.exceeds, Some(2), "{poly}");
                }
            }
        }
    }

    #[test]
    fn nondegenerate_quadratic_rank_is_n() {
        let poly = Polynomial::parse(f(3), 2, "x1^2 + x2^2").unwrap();
        assert_eq!(rank(&poly, 2).unwrap().value(), Some(2));
        assert_eq!(rank_with(&poly, 2, RankMethod::Exhaustive).unwrap().value(), Some(2));
        let big = Polynomial::parse(f(5), 6, "x1^2 + x2^2 + x3^2 + x4^2 + x5^2 + x6^2").unwrap();
        let rep = rank(&big, 8).unwrap();
        assert_eq!(rep.at_most, Some(6));
        assert_eq!(rep.exceeds, Some(5));
    }

    #[test]
    fn translation_invariant_directions_lower_rank() {
        // (x1 + x2)^2 depends on one linear form only.
        let poly = Polynomial::parse(f(3), 3, "x1^2 + 2*x1*x2 + x2^2").unwrap();
        assert_eq!(rank(&poly, 2).unwrap().value(), Some(1));
    }

    #[test]
    fn set_rank_uses_combinations() {
        let field = f(2);
        let a = Polynomial::parse(field, 2, "x1*x2").unwrap();
        let b = Polynomial::parse(field, 2, "x1*x2 + x1").unwrap();
        // a + b = x1 has degree 1 < 2, so the set has rank <= 1.
        let rep = rank_of_set(&[a.clone(), b], 2).unwrap();
        assert_eq!(rep.at_most, Some(1));
        assert_eq!(rank_of_set(&[a], 2).unwrap().value(), Some(2));
    }

    #[test]
    fn cubic_on_large_space_is_lower_bound_only() {
        let poly = Polynomial::parse(f(2), 8, "x1*x2*x3 + x4*x5*x6").unwrap();
        let rep = rank(&poly, 2).unwrap();
        assert_eq!(rep.rank_kind, RankKind::LowerBoundOnly);
        assert_eq!(rep.exceeds, Some(0));
    }
}
