//! Dense function tables on F_p^n.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{AffineMap, PrimeField, Space};
use crate::polynomials::Polynomial;

/// Slack allowed on the unit-disk and unit-interval checks.
pub const DISK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Codomain {
    /// Values in F_p; the complex view is e_p(value).
    Field,
    /// Complex values with |z| <= 1.
    Disk,
    /// Real values in [-1, 1].
    Real,
    /// Unconstrained complex values, for derived quantities such as boundary
    /// functions (sums of several disk-valued averages).
    Complex,
}

/// Values of f at every point of F_p^n, in enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionTable {
    space: Space,
    codomain: Codomain,
    values: Vec<Complex64>,
    residues: Option<Vec<u8>>,
}

impl FunctionTable {
    /// Field-valued table; the complex values are e_p(v).
    pub fn from_field(field: PrimeField, n: usize, residues: Vec<u8>) -> Result<Self> {
        let space = Space::new(field, n)?;
        check_len(&space, residues.len())?;
        if let Some((i, v)) = residues.iter().enumerate().find(|(_, &v)| v as u32 >= field.p()) {
            return invalid(format!("value {v} at index {i} is not a residue mod {}", field.p()));
        }
        let roots = field.roots();
        let values = residues.iter().map(|&r| roots[r as usize]).collect();
        Ok(Self { space, codomain: Codomain::Field, values, residues: Some(residues) })
    }

    pub fn from_complex(field: PrimeField, n: usize, values: Vec<Complex64>, codomain: Codomain) -> Result<Self> {
        let space = Space::new(field, n)?;
        check_len(&space, values.len())?;
        for (i, z) in values.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return invalid(format!("value at index {i} is not finite"));
            }
            match codomain {
                Codomain::Disk if z.norm() > 1.0 + DISK_TOLERANCE => {
                    return invalid(format!("|value| = {} at index {i} exceeds 1", z.norm()));
                }
                Codomain::Real if z.im != 0.0 || z.re.abs() > 1.0 + DISK_TOLERANCE => {
                    return invalid(format!("value at index {i} is not a real number in [-1, 1]"));
                }
                Codomain::Field => return invalid("use from_field for field-valued tables"),
                _ => {}
            }
        }
        Ok(Self { space, codomain, values, residues: None })
    }

    pub fn from_real(field: PrimeField, n: usize, values: Vec<f64>) -> Result<Self> {
        Self::from_complex(field, n, values.into_iter().map(|x| Complex64::new(x, 0.0)).collect(), Codomain::Real)
    }

    pub fn disk(field: PrimeField, n: usize, values: Vec<Complex64>) -> Result<Self> {
        Self::from_complex(field, n, values, Codomain::Disk)
    }

    pub fn constant(field: PrimeField, n: usize, c: Complex64) -> Result<Self> {
        let space = Space::new(field, n)?;
        let codomain = if c.norm() <= 1.0 + DISK_TOLERANCE { Codomain::Disk } else { Codomain::Complex };
        Self::from_complex(field, n, vec![c; space.size()], codomain)
    }

    /// 1_A for A given by membership flags.
    pub fn indicator(field: PrimeField, n: usize, members: &[bool]) -> Result<Self> {
        Self::from_real(field, n, members.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
    }

    /// The field-valued table of P (its complex view is e_p(P)).
    pub fn from_polynomial(poly: &Polynomial) -> Result<Self> {
        Self::from_field(poly.field(), poly.num_vars(), poly.to_table()?)
    }

    /// Uniform random point of the closed unit disk at each entry.
    pub fn random_disk<R: Rng + ?Sized>(field: PrimeField, n: usize, rng: &mut R) -> Result<Self> {
        let space = Space::new(field, n)?;
        let values = (0..space.size())
            .map(|_| {
                let r: f64 = rng.random::<f64>().sqrt();
                let theta: f64 = rng.random::<f64>() * std::f64::consts::TAU;
                Complex64::from_polar(r, theta)
            })
            .collect();
        Self::from_complex(field, n, values, Codomain::Disk)
    }

    /// Uniform random unit-modulus entries.
    pub fn random_unit<R: Rng + ?Sized>(field: PrimeField, n: usize, rng: &mut R) -> Result<Self> {
        let space = Space::new(field, n)?;
        let values = (0..space.size()).map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU)).collect();
        Self::from_complex(field, n, values, Codomain::Disk)
    }

    /// Uniform random residues.
    pub fn random_field<R: Rng + ?Sized>(field: PrimeField, n: usize, rng: &mut R) -> Result<Self> {
        let space = Space::new(field, n)?;
        let residues = (0..space.size()).map(|_| rng.random_range(0..field.p()) as u8).collect();
        Self::from_field(field, n, residues)
    }

    /// Uniform random reals in [lo, hi] ⊆ [-1, 1].
    pub fn random_real<R: Rng + ?Sized>(field: PrimeField, n: usize, lo: f64, hi: f64, rng: &mut R) -> Result<Self> {
        let space = Space::new(field, n)?;
        Self::from_real(field, n, (0..space.size()).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect())
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn field(&self) -> PrimeField {
        self.space.field
    }

    pub fn p(&self) -> u32 {
        self.space.p()
    }

    pub fn n(&self) -> usize {
        self.space.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn codomain(&self) -> Codomain {
        self.codomain
    }

    /// Complex values (e_p-lifted for field-valued tables).
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Residues of a field-valued table.
    pub fn residues(&self) -> Option<&[u8]> {
        self.residues.as_deref()
    }

    pub fn same_shape(&self, other: &FunctionTable) -> Result<()> {
        if self.p() != other.p() || self.n() != other.n() {
            return invalid(format!(
                "shape mismatch: (p={}, n={}) vs (p={}, n={})",
                self.p(),
                self.n(),
                other.p(),
                other.n()
            ));
        }
        Ok(())
    }

    /// Applies `op` to the complex values; the result is classified as the
    /// tightest codomain that holds it.
    pub fn map_values(&self, op: impl Fn(Complex64) -> Complex64) -> FunctionTable {
        derived(self.space, self.values.iter().map(|&z| op(z)).collect())
    }

    pub fn conj(&self) -> FunctionTable {
        match &self.residues {
            Some(r) => {
                let f = self.field();
                FunctionTable::from_field(f, self.n(), r.iter().map(|&v| f.neg(v)).collect()).expect("residues stay in range")
            }
            None => {
                let mut t = self.map_values(|z| z.conj());
                t.codomain = self.codomain;
                t
            }
        }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &FunctionTable) -> Result<FunctionTable> {
        self.same_shape(other)?;
        if let (Some(a), Some(b)) = (&self.residues, &other.residues) {
            let f = self.field();
            return FunctionTable::from_field(f, self.n(), a.iter().zip(b).map(|(&x, &y)| f.add(x, y)).collect());
        }
        Ok(derived(self.space, self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect()))
    }

    /// self + t · other (complex view).
    pub fn add_scaled(&self, t: f64, other: &FunctionTable) -> Result<FunctionTable> {
        self.same_shape(other)?;
        Ok(derived(self.space, self.values.iter().zip(&other.values).map(|(a, b)| a + b * t).collect()))
    }

    /// (A f)(x) = f(A x).
    pub fn compose_affine(&self, map: &AffineMap) -> Result<FunctionTable> {
        let perm = map.permutation(&self.space)?;
        Ok(match &self.residues {
            Some(r) => FunctionTable::from_field(self.field(), self.n(), perm.iter().map(|&j| r[j]).collect())?,
            None => FunctionTable {
                space: self.space,
                codomain: self.codomain,
                values: perm.iter().map(|&j| self.values[j]).collect(),
                residues: None,
            },
        })
    }

    /// (f ⊗ g)(x, y) = f(x) g(y) on F_p^{n1 + n2}.
    pub fn tensor(&self, other: &FunctionTable) -> Result<FunctionTable> {
        if self.p() != other.p() {
            return invalid("tensor product of tables over different fields");
        }
        let n = self.n() + other.n();
        if let (Some(a), Some(b)) = (&self.residues, &other.residues) {
            let f = self.field();
            return FunctionTable::from_field(f, n, a.iter().flat_map(|&x| b.iter().map(move |&y| f.add(x, y))).collect());
        }
        let space = Space::new(self.field(), n)?;
        Ok(derived(space, self.values.iter().flat_map(|&x| other.values.iter().map(move |&y| x * y)).collect()))
    }

    /// E_x f(x).
    pub fn mean(&self) -> Complex64 {
        crate::par::complex_sum(self.values.iter().copied()) / self.len() as f64
    }

    /// E_x |f(x)|^2.
    pub fn l2_squared(&self) -> f64 {
        crate::par::real_sum(self.values.iter().map(|z| z.norm_sqr())) / self.len() as f64
    }

    /// Max pointwise distance between complex views.
    pub fn max_abs_diff(&self, other: &FunctionTable) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

fn check_len(space: &Space, len: usize) -> Result<()> {
    if len != space.size() {
        return Err(Error::DimensionMismatch { expected: space.size(), got: len });
    }
    Ok(())
}

/// One entry of the table JSON: residues for field tables, numbers for real
/// tables and `[re, im]` pairs otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonValue {
    Residue(u64),
    Number(f64),
    Pair([f64; 2]),
}

/// `{p, n, codomain, values}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionTableJson {
    pub p: u32,
    pub n: usize,
    pub codomain: Codomain,
    pub values: Vec<JsonValue>,
}

impl FunctionTable {
    pub fn to_json(&self) -> FunctionTableJson {
        let values = match (&self.residues, self.codomain) {
            (Some(r), _) => r.iter().map(|&v| JsonValue::Residue(v as u64)).collect(),
            (None, Codomain::Real) => self.values.iter().map(|z| JsonValue::Number(z.re)).collect(),
            _ => self.values.iter().map(|z| JsonValue::Pair([z.re, z.im])).collect(),
        };
        FunctionTableJson { p: self.p(), n: self.n(), codomain: self.codomain, values }
    }

    /// Validating inverse of [`to_json`](Self::to_json). Errors name the
    /// offending entry as `values/<index>`.
    pub fn from_json(json: &FunctionTableJson) -> Result<Self> {
        let field = PrimeField::new(json.p)?;
        let bad = |i: usize, what: &str| Error::Parse(format!("values/{i}: {what}"));
        let space = Space::new(field, json.n)?;
        if json.values.len() != space.size() {
            return Err(Error::Parse(format!("values: expected {} entries, got {}", space.size(), json.values.len())));
        }
        if json.codomain == Codomain::Field {
            let residues = json
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| match *v {
                    JsonValue::Residue(r) if r < json.p as u64 => Ok(r as u8),
                    JsonValue::Residue(r) => Err(bad(i, &format!("{r} is not a residue mod {}", json.p))),
                    _ => Err(bad(i, "field tables hold integer residues")),
                })
                .collect::<Result<Vec<u8>>>()?;
            return Self::from_field(field, json.n, residues);
        }
        let mut values = Vec::with_capacity(json.values.len());
        for (i, v) in json.values.iter().enumerate() {
            let z = match *v {
                JsonValue::Residue(r) => Complex64::new(r as f64, 0.0),
                JsonValue::Number(x) => Complex64::new(x, 0.0),
                JsonValue::Pair([re, im]) if json.codomain != Codomain::Real => Complex64::new(re, im),
                JsonValue::Pair(_) => return Err(bad(i, "real tables hold plain numbers")),
            };
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(bad(i, "not finite"));
            }
            match json.codomain {
                Codomain::Disk if z.norm() > 1.0 + DISK_TOLERANCE => return Err(bad(i, &format!("|z| = {} exceeds 1", z.norm()))),
                Codomain::Real if z.re.abs() > 1.0 + DISK_TOLERANCE => return Err(bad(i, &format!("{} is outside [-1, 1]", z.re))),
                _ => {}
            }
            values.push(z);
        }
        Self::from_complex(field, json.n, values, json.codomain)
    }
}

/// Builds a table from computed values, picking Real / Disk / Complex.
pub(crate) fn derived(space: Space, values: Vec<Complex64>) -> FunctionTable {
    let codomain = if values.iter().all(|z| z.im == 0.0 && z.re.abs() <= 1.0 + DISK_TOLERANCE) {
        Codomain::Real
    } else if values.iter().all(|z| z.norm() <= 1.0 + DISK_TOLERANCE) {
        Codomain::Disk
    } else {
        Codomain::Complex
    };
    FunctionTable { space, codomain, values, residues: None }
}

/// E_x f(x) conj(g(x)).
pub fn inner_product(f: &FunctionTable, g: &FunctionTable) -> Result<Complex64> {
    f.same_shape(g)?;
    Ok(crate::par::complex_sum(f.values().iter().zip(g.values()).map(|(a, b)| a * b.conj())) / f.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::rng_from_seed;

    fn f(p: u32) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn validation() {
        assert!(FunctionTable::from_field(f(5), 1, vec![0, 1, 2, 3, 7]).is_err());
        assert!(FunctionTable::disk(f(2), 1, vec![Complex64::new(1.5, 0.0), Complex64::new(0.0, 0.0)]).is_err());
        assert!(FunctionTable::from_real(f(2), 1, vec![0.5, 2.0]).is_err());
        assert!(FunctionTable::from_real(f(2), 2, vec![0.5]).is_err());
    }

    #[test]
    fn inner_product_examples() {
        let mut rng = rng_from_seed(1);
        let u = FunctionTable::random_unit(f(3), 2, &mut rng).unwrap();
        assert!((inner_product(&u, &u).unwrap() - 1.0).norm() < 1e-12);
        let x1 = FunctionTable::from_polynomial(&Polynomial::parse(f(2), 2, "x1").unwrap()).unwrap();
        let x2 = FunctionTable::from_polynomial(&Polynomial::parse(f(2), 2, "x2").unwrap()).unwrap();
        assert!(inner_product(&x1, &x2).unwrap().norm() < 1e-15);
        let members: Vec<bool> = (0..27).map(|_| rng.random::<bool>()).collect();
        let count = members.iter().filter(|&&b| b).count();
        let ind = FunctionTable::indicator(f(3), 3, &members).unwrap();
        let one = FunctionTable::constant(f(3), 3, Complex64::new(1.0, 0.0)).unwrap();
        assert!((inner_product(&ind, &one).unwrap().re - count as f64 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn field_operations_stay_exact() {
        let mut rng = rng_from_seed(2);
        let a = FunctionTable::random_field(f(5), 2, &mut rng).unwrap();
        let b = FunctionTable::random_field(f(5), 2, &mut rng).unwrap();
        let prod = a.mul(&b).unwrap();
        assert_eq!(prod.codomain(), Codomain::Field);
        let direct: Vec<Complex64> = a.values().iter().zip(b.values()).map(|(x, y)| x * y).collect();
        assert!(prod.values().iter().zip(&direct).all(|(x, y)| (x - y).norm() < 1e-12));
        assert!(a.mul(&a.conj()).unwrap().residues().unwrap().iter().all(|&r| r == 0));
    }

    #[test]
    fn tensor_layout() {
        let a = FunctionTable::from_real(f(2), 1, vec![0.5, -0.5]).unwrap();
        let b = FunctionTable::from_real(f(2), 1, vec![1.0, 0.25]).unwrap();
        let t = a.tensor(&b).unwrap();
        let re: Vec<f64> = t.values().iter().map(|z| z.re).collect();
        assert_eq!(re, vec![0.5, 0.125, -0.5, -0.125]);
    }
}
