//! ‖f‖_{u(D)} = max_{g ∈ D} |⟨f, e_p(g)⟩| for D = Poly_d or an explicit list.
//!
//! For Poly_d the constant term is irrelevant and the linear part is handled
//! by one Fourier transform per assignment of the higher-degree coefficients:
//! ⟨f, e_p(Q + α·x)⟩ is the α-th Fourier coefficient of f·conj(e_p(Q)).

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use super::fourier::dft_in_place;
use super::table::{inner_product, FunctionTable};
use crate::error::{invalid, Error, Result};
use crate::field::{check_budget, pow_u128, rng_from_seed, PrimeField, Space};
use crate::par;
use crate::polynomials::{monomials, Polynomial};

/// The family Poly_d(F_p^n), optionally restricted to homogeneous polynomials
/// of degree exactly d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolyFamily {
    pub degree: u32,
    pub homogeneous: bool,
}

impl PolyFamily {
    pub fn new(degree: u32) -> Self {
        Self { degree, homogeneous: false }
    }

    pub fn homogeneous(degree: u32) -> Self {
        Self { degree, homogeneous: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Correlation {
    pub value: f64,
    /// Maximizer when the family is a set of polynomials.
    pub witness: Option<Polynomial>,
    /// Maximizer when the family is an explicit list of tables.
    pub witness_index: Option<usize>,
    /// Number of family members examined.
    pub candidates: u128,
    /// Set when only a random subset was examined: `value` is then a lower
    /// bound on the supremum.
    pub lower_bound_only: bool,
}

/// Residue tables of the given monomials.
fn monomial_tables(space: &Space, monos: &[Vec<u8>]) -> Result<Vec<Vec<u8>>> {
    monos.iter().map(|e| Polynomial::new(space.field, space.n, [(e.clone(), 1)])?.to_table()).collect()
}

fn decode(mut idx: usize, p: usize, out: &mut [u8]) {
    for slot in out.iter_mut().rev() {
        *slot = (idx % p) as u8;
        idx /= p;
    }
}

fn polynomial_from(field: PrimeField, n: usize, monos: &[Vec<u8>], coeffs: &[u8], linear: Option<usize>) -> Result<Polynomial> {
    let mut terms: Vec<(Vec<u8>, u8)> = monos.iter().cloned().zip(coeffs.iter().copied()).filter(|(_, c)| *c != 0).collect();
    if let Some(alpha) = linear {
        let space = Space::new(field, n)?;
        let a = space.vector(alpha);
        for (i, &c) in a.coords.iter().enumerate() {
            if c != 0 {
                let mut e = vec![0u8; n];
                e[i] = 1;
                terms.push((e, c));
            }
        }
    }
    Polynomial::new(field, n, terms)
}

/// Exact ‖f‖_{u(Poly_d)} with a maximizing polynomial. Errors with
/// `BudgetExceeded` when (#candidates)·p^n exceeds the enumeration budget;
/// [`random_polynomial_lower_bound`] is the fallback.
pub fn correlation_with_family(f: &FunctionTable, family: PolyFamily) -> Result<Correlation> {
    let space = *f.space();
    let field = space.field;
    let p = field.p() as usize;
    let d = family.degree;
    if d as usize > space.n * (p - 1) {
        return invalid(format!("degree {d} exceeds n(p-1) = {}", space.n * (p - 1)));
    }
    let values = f.values();
    // Homogeneous of degree d: enumerate the degree-d coefficients directly
    // (d = 1 is still the Fourier case).
    let (monos, with_fft) = if family.homogeneous && d != 1 {
        (monomials(field, space.n, d, true), false)
    } else {
        (monomials(field, space.n, d, false).into_iter().filter(|e| e.iter().map(|&x| x as u32).sum::<u32>() >= 2).collect(), d >= 1)
    };
    let count = pow_u128(p as u64, monos.len());
    check_budget(count.saturating_mul(space.size() as u128))?;
    let count = count as usize;
    let tables = monomial_tables(&space, &monos)?;
    let roots = field.roots();
    let scale = 1.0 / space.size() as f64;
    let best = par::map_indexed(count, |c| {
        let mut coeffs = vec![0u8; monos.len()];
        decode(c, p, &mut coeffs);
        let mut q = vec![0u8; space.size()];
        for (t, &a) in tables.iter().zip(&coeffs) {
            if a != 0 {
                for (qx, &tx) in q.iter_mut().zip(t) {
                    *qx = field.add(*qx, field.mul(a, tx));
                }
            }
        }
        let mut g: Vec<Complex64> = values.iter().zip(&q).map(|(v, &r)| v * roots[r as usize].conj()).collect();
        if with_fft {
            dft_in_place(&space, &mut g, -1);
            let (mut val, mut at) = (-1.0, 0usize);
            for (i, z) in g.iter().enumerate() {
                let a = z.norm() * scale;
                if a > val {
                    (val, at) = (a, i);
                }
            }
            (val, Some(at))
        } else {
            (par::complex_sum(g.iter().copied()).norm() * scale, None)
        }
    });
    let (mut value, mut arg) = (-1.0, (0usize, None));
    for (c, (v, lin)) in best.into_iter().enumerate() {
        if v > value {
            value = v;
            arg = (c, lin);
        }
    }
    let mut coeffs = vec![0u8; monos.len()];
    decode(arg.0, p, &mut coeffs);
    let witness = polynomial_from(field, space.n, &monos, &coeffs, arg.1)?;
    let candidates = if with_fft { count as u128 * space.size() as u128 } else { count as u128 };
    Ok(Correlation { value: value.max(0.0), witness: Some(witness), witness_index: None, candidates, lower_bound_only: false })
}

/// max_i |⟨f, g_i⟩| over an explicit family (field-valued members are lifted
/// through e_p).
pub fn correlation_with_tables(f: &FunctionTable, family: &[FunctionTable]) -> Result<Correlation> {
    if family.is_empty() {
        return invalid("empty family");
    }
    let mut value = -1.0;
    let mut at = 0;
    for (i, g) in family.iter().enumerate() {
        let v = inner_product(f, g)?.norm();
        if v > value {
            (value, at) = (v, i);
        }
    }
    Ok(Correlation { value, witness: None, witness_index: Some(at), candidates: family.len() as u128, lower_bound_only: false })
}

/// Lower bound on ‖f‖_{u(Poly_d)} from `samples` uniformly random members of
/// Poly_d (coefficients uniform on the monomial basis).
pub fn random_polynomial_lower_bound(f: &FunctionTable, family: PolyFamily, samples: u64, seed: u64) -> Result<Correlation> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    let space = *f.space();
    let field = space.field;
    let monos = monomials(field, space.n, family.degree, family.homogeneous);
    let tables = monomial_tables(&space, &monos)?;
    let roots = field.roots();
    let mut rng = rng_from_seed(seed);
    let mut value = -1.0;
    let mut witness = None;
    for _ in 0..samples {
        let coeffs: Vec<u8> = (0..monos.len()).map(|_| rng.random_range(0..field.p()) as u8).collect();
        let mut q = vec![0u8; space.size()];
        for (t, &a) in tables.iter().zip(&coeffs) {
            for (qx, &tx) in q.iter_mut().zip(t) {
                *qx = field.add(*qx, field.mul(a, tx));
            }
        }
        let v = par::complex_sum(f.values().iter().zip(&q).map(|(z, &r)| z * roots[r as usize].conj())).norm() / space.size() as f64;
        if v > value {
            value = v;
            witness = Some(coeffs);
        }
    }
    let witness = polynomial_from(field, space.n, &monos, &witness.unwrap_or_default(), None)?;
    Ok(Correlation { value, witness: Some(witness), witness_index: None, candidates: samples as u128, lower_bound_only: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{gowers_norm, linear_correlation};
    use crate::estimate::Mode;
    use crate::polynomials::random_polynomial;

    fn fld(p: u32) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn self_correlation_is_one() {
        for (p, n, d) in [(2, 4, 2), (3, 2, 2), (5, 2, 1)] {
            let q = random_polynomial(p, n, d, false, 3).unwrap();
            let f = FunctionTable::from_polynomial(&q).unwrap();
            let c = correlation_with_family(&f, PolyFamily::new(d)).unwrap();
            assert!((c.value - 1.0).abs() < 1e-12);
            // The witness agrees with q up to a constant.
            let w = FunctionTable::from_polynomial(c.witness.as_ref().unwrap()).unwrap();
            assert!((inner_product(&f, &w).unwrap().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_function() {
        let f = FunctionTable::constant(fld(3), 2, Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(correlation_with_family(&f, PolyFamily::new(2)).unwrap().value, 0.0);
    }

    /// Brute force over every polynomial of degree <= d, constant included.
    fn brute(f: &FunctionTable, d: u32) -> f64 {
        let field = f.field();
        let monos = monomials(field, f.n(), d, false);
        let p = field.p() as usize;
        let mut best: f64 = 0.0;
        let mut coeffs = vec![0u8; monos.len()];
        for c in 0..p.pow(monos.len() as u32) {
            decode(c, p, &mut coeffs);
            let q = polynomial_from(field, f.n(), &monos, &coeffs, None).unwrap();
            let g = FunctionTable::from_polynomial(&q).unwrap();
            best = best.max(inner_product(f, &g).unwrap().norm());
        }
        best
    }

    #[test]
    fn matches_brute_force_and_direct_inequality() {
        let mut rng = crate::field::rng_from_seed(21);
        for (p, n, d) in [(2, 3, 2), (3, 2, 1), (2, 3, 1)] {
            let f = FunctionTable::random_disk(fld(p), n, &mut rng).unwrap();
            let c = correlation_with_family(&f, PolyFamily::new(d)).unwrap().value;
            assert!((c - brute(&f, d)).abs() < 1e-12);
            assert!(c <= gowers_norm(&f, d as usize + 1, Mode::Exact).unwrap().value + 1e-9);
        }
        let f = FunctionTable::random_disk(fld(2), 4, &mut rng).unwrap();
        assert!((correlation_with_family(&f, PolyFamily::new(1)).unwrap().value - linear_correlation(&f)).abs() < 1e-12);
    }

    #[test]
    fn homogeneous_filter() {
        let q = Polynomial::parse(fld(3), 2, "x1^2 + 2*x1*x2").unwrap();
        let f = FunctionTable::from_polynomial(&q).unwrap();
        let c = correlation_with_family(&f, PolyFamily::homogeneous(2)).unwrap();
        assert!((c.value - 1.0).abs() < 1e-12);
        assert!(c.witness.unwrap().is_homogeneous());
    }

    #[test]
    fn budget_and_fallback() {
        let f = FunctionTable::random_disk(fld(3), 6, &mut crate::field::rng_from_seed(1)).unwrap();
        assert!(matches!(correlation_with_family(&f, PolyFamily::new(2)), Err(Error::BudgetExceeded { .. })));
        let lb = random_polynomial_lower_bound(&f, PolyFamily::new(2), 50, 4).unwrap();
        assert!(lb.lower_bound_only && lb.value > 0.0);
    }

    #[test]
    fn explicit_family() {
        let q = Polynomial::parse(fld(2), 2, "x1").unwrap();
        let f = FunctionTable::from_polynomial(&q).unwrap();
        let fam = vec![
            FunctionTable::from_polynomial(&Polynomial::parse(fld(2), 2, "x2").unwrap()).unwrap(),
            f.clone(),
        ];
        let c = correlation_with_tables(&f, &fam).unwrap();
        assert_eq!(c.witness_index, Some(1));
        assert!((c.value - 1.0).abs() < 1e-12);
    }
}
