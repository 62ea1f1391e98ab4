//! Dual families D = (D_n) of field-valued functions and a heuristic scan for
//! the testing degree.

use rand::Rng;
use serde::Serialize;

use super::{run_tester, uniformity_tester_spec};
use crate::analysis::{correlation_with_family, correlation_with_tables, Correlation, FunctionTable, PolyFamily};
use crate::error::{invalid, Result};
use crate::field::{check_budget, pow_u128, random_affine_with, rng_from_seed, substream, PrimeField, Space};
use crate::polynomials::{monomials, Polynomial};

#[derive(Debug, Clone, PartialEq)]
pub enum DualGenerator {
    /// Poly_d(F_p^n).
    Polynomials { degree: u32 },
    /// A fixed list of field-valued tables for a single n.
    Explicit(Vec<FunctionTable>),
}

/// A family with the three properties of a proper dual family recorded as
/// declared flags: consistency under adding coordinates (A1), closure under
/// affine maps (A2, spot-checkable) and size p^{o(p^n)} (A3, see
/// [`DualFamily::sparsity`]).
#[derive(Debug, Clone, PartialEq)]
pub struct DualFamily {
    pub field: PrimeField,
    pub generator: DualGenerator,
    pub consistent: bool,
    pub affine_invariant: bool,
}

impl DualFamily {
    pub fn polynomials(field: PrimeField, degree: u32) -> Self {
        Self { field, generator: DualGenerator::Polynomials { degree }, consistent: true, affine_invariant: true }
    }

    pub fn explicit(field: PrimeField, members: Vec<FunctionTable>) -> Result<Self> {
        let Some(first) = members.first() else {
            return invalid("empty family");
        };
        for m in &members {
            if m.residues().is_none() || m.p() != field.p() || m.n() != first.n() {
                return invalid("explicit members must be field-valued tables on one space");
            }
        }
        Ok(Self { field, generator: DualGenerator::Explicit(members), consistent: false, affine_invariant: false })
    }

    /// |D_n|.
    pub fn size(&self, n: usize) -> u128 {
        match &self.generator {
            DualGenerator::Polynomials { degree } => pow_u128(self.field.p() as u64, monomials(self.field, n, *degree, false).len()),
            DualGenerator::Explicit(m) => if m[0].n() == n { m.len() as u128 } else { 0 },
        }
    }

    /// log_p |D_n| / p^n; A3 asks for this to tend to 0.
    pub fn sparsity(&self, n: usize) -> f64 {
        let p = self.field.p() as f64;
        (self.size(n) as f64).ln() / p.ln() / p.powi(n as i32)
    }

    pub fn members(&self, n: usize) -> Result<Vec<FunctionTable>> {
        match &self.generator {
            DualGenerator::Explicit(m) if m[0].n() == n => Ok(m.clone()),
            DualGenerator::Explicit(_) => invalid(format!("explicit family has no members at n = {n}")),
            DualGenerator::Polynomials { degree } => {
                let space = Space::new(self.field, n)?;
                let count = self.size(n);
                check_budget(count.saturating_mul(space.size() as u128))?;
                let monos = monomials(self.field, n, *degree, false);
                let p = self.field.p() as usize;
                (0..count as usize)
                    .map(|c| {
                        let mut rest = c;
                        let terms: Vec<(Vec<u8>, u8)> = monos
                            .iter()
                            .map(|e| {
                                let a = (rest % p) as u8;
                                rest /= p;
                                (e.clone(), a)
                            })
                            .collect();
                        FunctionTable::from_polynomial(&Polynomial::new(self.field, n, terms)?)
                    })
                    .collect()
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<FunctionTable> {
        match &self.generator {
            DualGenerator::Explicit(m) if m[0].n() == n => Ok(m[rng.random_range(0..m.len())].clone()),
            DualGenerator::Explicit(_) => invalid(format!("explicit family has no members at n = {n}")),
            DualGenerator::Polynomials { degree } => {
                let monos = monomials(self.field, n, *degree, false);
                let terms = monos.into_iter().map(|e| (e, rng.random_range(0..self.field.p()) as u8));
                FunctionTable::from_polynomial(&Polynomial::new(self.field, n, terms)?)
            }
        }
    }

    pub fn contains(&self, g: &FunctionTable) -> Result<bool> {
        let Some(res) = g.residues() else {
            return Ok(false);
        };
        match &self.generator {
            DualGenerator::Polynomials { degree } => {
                let q = Polynomial::interpolate(self.field, g.n(), res)?;
                Ok(q.degree() <= *degree as i32)
            }
            DualGenerator::Explicit(m) => Ok(m.iter().any(|t| t.residues() == Some(res))),
        }
    }

    /// Spot check of A2: for sampled members g and random affine A, g∘A ∈ D_n.
    pub fn spot_check_affine(&self, n: usize, trials: usize, seed: u64) -> Result<bool> {
        let mut rng = rng_from_seed(seed);
        for _ in 0..trials {
            let g = self.sample(n, &mut rng)?;
            let a = random_affine_with(self.field, n, &mut rng)?;
            if !self.contains(&g.compose_affine(&a)?)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// ‖e_p(f)‖_{u(D_n)} (f may be any table on F_p^n).
    pub fn correlation(&self, f: &FunctionTable) -> Result<Correlation> {
        match &self.generator {
            DualGenerator::Polynomials { degree } => correlation_with_family(f, PolyFamily::new(*degree)),
            DualGenerator::Explicit(m) => correlation_with_tables(f, m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestingDegreeReport {
    /// (d, mean acceptance on structured inputs − mean acceptance on random inputs).
    pub separations: Vec<(u32, f64)>,
    pub best_degree: u32,
    /// Always true: the scan is an empirical heuristic, not a decision procedure.
    pub heuristic: bool,
}

/// Runs the U^{d+1} tester for d = 1..=max_degree on structured and random
/// inputs and reports the degree with the largest acceptance gap.
pub fn find_testing_degree(structured: &[FunctionTable], random: &[FunctionTable], max_degree: u32, trials: u64, seed: u64) -> Result<TestingDegreeReport> {
    let Some(first) = structured.first().or(random.first()) else {
        return invalid("no inputs");
    };
    if max_degree == 0 {
        return invalid("max_degree must be at least 1");
    }
    let p = first.p();
    let mut separations = Vec::new();
    let mut stream = 0u64;
    let mut mean = |set: &[FunctionTable], d: u32| -> Result<f64> {
        let spec = uniformity_tester_spec(p, d, 0.5, 0.25)?;
        let mut acc = 0.0;
        for f in set {
            stream += 1;
            acc += run_tester(&spec, f, trials, substream(seed, stream).random())?.acceptance.value;
        }
        Ok(acc / set.len().max(1) as f64)
    };
    for d in 1..=max_degree {
        let gap = mean(structured, d)? - mean(random, d)?;
        separations.push((d, gap));
    }
    let best_degree = separations.iter().fold((0, f64::NEG_INFINITY), |b, &(d, g)| if g > b.1 { (d, g) } else { b }).0;
    Ok(TestingDegreeReport { separations, best_degree, heuristic: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fld(p: u32) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn polynomial_family_basics() {
        let fam = DualFamily::polynomials(fld(2), 1);
        assert_eq!(fam.size(3), 16);
        assert_eq!(fam.members(3).unwrap().len(), 16);
        assert!(fam.spot_check_affine(3, 20, 1).unwrap());
        let q = Polynomial::parse(fld(2), 3, "x1*x2").unwrap();
        assert!(!fam.contains(&FunctionTable::from_polynomial(&q).unwrap()).unwrap());
        assert!(fam.sparsity(6) < fam.sparsity(3));
    }

    #[test]
    fn explicit_family_is_not_closed() {
        let g = FunctionTable::from_polynomial(&Polynomial::parse(fld(3), 2, "x1").unwrap()).unwrap();
        let fam = DualFamily::explicit(fld(3), vec![g]).unwrap();
        assert!(!fam.spot_check_affine(2, 30, 2).unwrap());
    }

    #[test]
    fn degree_scan_prefers_quadratics_for_quadratic_phases() {
        let structured: Vec<FunctionTable> = (0..3)
            .map(|s| FunctionTable::from_polynomial(&crate::polynomials::random_polynomial(2, 6, 2, false, s).unwrap()).unwrap())
            .collect();
        let random: Vec<FunctionTable> = (0..3).map(|s| FunctionTable::random_field(fld(2), 6, &mut rng_from_seed(s)).unwrap()).collect();
        let rep = find_testing_degree(&structured, &random, 2, 2000, 5).unwrap();
        assert_eq!(rep.best_degree, 2);
        assert!(rep.heuristic);
    }
}
