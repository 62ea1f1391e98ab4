//! Prime fields, points of F_p^n, exhaustive enumeration and affine maps.

use std::f64::consts::TAU;
use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Largest supported modulus.
pub const MAX_PRIME: u32 = 251;

/// Default cap on the number of points an exact enumeration may visit.
pub const DEFAULT_BUDGET: u64 = 1 << 24;

static BUDGET: AtomicU64 = AtomicU64::new(DEFAULT_BUDGET);

/// Current exact-enumeration budget.
pub fn enumeration_budget() -> u64 {
    BUDGET.load(Ordering::Relaxed)
}

/// Replaces the exact-enumeration budget, returning the previous value.
pub fn set_enumeration_budget(points: u64) -> u64 {
    BUDGET.swap(points.max(1), Ordering::Relaxed)
}

/// Fails with [`Error::BudgetExceeded`] when `needed` points are over budget.
pub fn check_budget(needed: u128) -> Result<()> {
    let budget = enumeration_budget();
    if needed > budget as u128 {
        Err(Error::BudgetExceeded { needed, budget })
    } else {
        Ok(())
    }
}

/// `base^exp` as u128, saturating.
pub fn pow_u128(base: u64, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}

/// Deterministic RNG for a seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent RNG stream `stream` derived from `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The prime field F_p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct PrimeField {
    p: u32,
}

impl TryFrom<u32> for PrimeField {
    type Error = Error;
    fn try_from(p: u32) -> Result<Self> {
        PrimeField::new(p)
    }
}

impl From<PrimeField> for u32 {
    fn from(f: PrimeField) -> u32 {
        f.p
    }
}

impl PrimeField {
    pub fn new(p: u32) -> Result<Self> {
        if !(2..=MAX_PRIME).contains(&p) || !(2..p).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d)) {
            return Err(Error::InvalidPrime(p));
        }
        Ok(Self { p })
    }

    #[inline]
    pub fn p(self) -> u32 {
        self.p
    }

    #[inline]
    pub fn reduce(self, x: i64) -> u8 {
        x.rem_euclid(self.p as i64) as u8
    }

    #[inline]
    pub fn add(self, a: u8, b: u8) -> u8 {
        ((a as u32 + b as u32) % self.p) as u8
    }

    #[inline]
    pub fn sub(self, a: u8, b: u8) -> u8 {
        ((a as u32 + self.p - b as u32) % self.p) as u8
    }

    #[inline]
    pub fn neg(self, a: u8) -> u8 {
        ((self.p - a as u32) % self.p) as u8
    }

    #[inline]
    pub fn mul(self, a: u8, b: u8) -> u8 {
        ((a as u32 * b as u32) % self.p) as u8
    }

    pub fn pow(self, a: u8, mut e: u32) -> u8 {
        let mut base = a as u32 % self.p;
        let mut acc = 1u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % self.p;
            }
            base = base * base % self.p;
            e >>= 1;
        }
        acc as u8
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(self, a: u8) -> Option<u8> {
        if (a as u32).is_multiple_of(self.p) {
            None
        } else {
            Some(self.pow(a, self.p - 2))
        }
    }

    /// e_p(m) = exp(2 pi i m / p).
    pub fn character(self, m: u8) -> Complex64 {
        self.roots()[m as usize % self.p as usize]
    }

    /// All p-th roots of unity, `roots()[j] = e_p(j)`.
    pub fn roots(self) -> Vec<Complex64> {
        (0..self.p)
            .map(|j| match (j, self.p) {
                (0, _) => Complex64::new(1.0, 0.0),
                (1, 2) => Complex64::new(-1.0, 0.0),
                _ => {
                    let (s, c) = (TAU * j as f64 / self.p as f64).sin_cos();
                    Complex64::new(c, s)
                }
            })
            .collect()
    }

    /// Binomial coefficient C(n, k) mod p.
    pub fn binomial(self, n: u32, k: u32) -> u8 {
        if k > n {
            return 0;
        }
        let mut num = 1u8;
        let mut den = 1u8;
        for i in 0..k {
            num = self.mul(num, ((n - i) % self.p) as u8);
            den = self.mul(den, ((i + 1) % self.p) as u8);
        }
        // n < p whenever this is used for exponents, so den != 0.
        match self.inv(den) {
            Some(inv) => self.mul(num, inv),
            None => 0,
        }
    }
}

/// A point of F_p^n.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FpVector {
    pub coords: Vec<u8>,
}

impl FpVector {
    pub fn new(field: PrimeField, coords: Vec<u8>) -> Result<Self> {
        if let Some(c) = coords.iter().find(|&&c| c as u32 >= field.p()) {
            return Err(Error::InvalidArgument(format!("coordinate {c} out of range for p={}", field.p())));
        }
        Ok(Self { coords })
    }

    pub fn zero(n: usize) -> Self {
        Self { coords: vec![0; n] }
    }

    /// Standard basis vector e_i (0-based).
    pub fn standard(n: usize, i: usize) -> Self {
        let mut coords = vec![0; n];
        coords[i] = 1;
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Index arithmetic on F_p^n, where a point is stored as the integer whose
/// base-p digits (most significant first) are its coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Space {
    pub field: PrimeField,
    pub n: usize,
    size: usize,
}

impl Space {
    pub fn new(field: PrimeField, n: usize) -> Result<Self> {
        let size = pow_u128(field.p() as u64, n);
        check_budget(size)?;
        Ok(Self { field, n, size: size as usize })
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.field.p()
    }

    /// Number of points p^n.
    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn index_of(&self, coords: &[u8]) -> usize {
        coords.iter().fold(0usize, |acc, &c| acc * self.p() as usize + c as usize)
    }

    pub fn digits_into(&self, mut idx: usize, out: &mut [u8]) {
        let p = self.p() as usize;
        for slot in out.iter_mut().rev() {
            *slot = (idx % p) as u8;
            idx /= p;
        }
    }

    pub fn vector(&self, idx: usize) -> FpVector {
        let mut coords = vec![0u8; self.n];
        self.digits_into(idx, &mut coords);
        FpVector { coords }
    }

    /// Index of `a*x + b*y` for scalars a, b.
    pub fn combine(&self, a: u8, x: usize, b: u8, y: usize) -> usize {
        let p = self.p() as usize;
        let (mut x, mut y) = (x, y);
        let mut out = 0usize;
        let mut place = 1usize;
        for _ in 0..self.n {
            let d = (a as usize * (x % p) + b as usize * (y % p)) % p;
            out += d * place;
            place *= p;
            x /= p;
            y /= p;
        }
        out
    }

    #[inline]
    pub fn add(&self, x: usize, y: usize) -> usize {
        if self.p() == 2 {
            x ^ y
        } else {
            self.combine(1, x, 1, y)
        }
    }

    #[inline]
    pub fn sub(&self, x: usize, y: usize) -> usize {
        if self.p() == 2 {
            x ^ y
        } else {
            self.combine(1, x, (self.p() - 1) as u8, y)
        }
    }

    pub fn scale(&self, a: u8, x: usize) -> usize {
        self.combine(a, x, 0, 0)
    }

    /// Inner product sum_i a(i) x(i).
    pub fn dot(&self, a: usize, x: usize) -> u8 {
        let p = self.p() as usize;
        let (mut a, mut x) = (a, x);
        let mut acc = 0usize;
        for _ in 0..self.n {
            acc += (a % p) * (x % p);
            a /= p;
            x /= p;
        }
        (acc % p) as u8
    }

    /// Uniformly random point index.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.size)
    }
}

/// All points of F_p^n in lexicographic order of coordinates.
pub fn enumerate_vectors(p: u32, n: usize) -> Result<impl Iterator<Item = FpVector>> {
    let space = Space::new(PrimeField::new(p)?, n)?;
    Ok((0..space.size()).map(move |i| space.vector(i)))
}

/// An invertible affine map x -> Mx + b on F_p^n.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineMap {
    pub field: PrimeField,
    pub matrix: Vec<Vec<u8>>,
    pub offset: FpVector,
}

impl AffineMap {
    pub fn new(field: PrimeField, matrix: Vec<Vec<u8>>, offset: FpVector) -> Result<Self> {
        let n = offset.dim();
        if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: matrix.len() });
        }
        if linalg::rank(field, &matrix) != n {
            return Err(Error::InvalidArgument("linear part is not invertible".into()));
        }
        Ok(Self { field, matrix, offset })
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let matrix = (0..n).map(|i| FpVector::standard(n, i).coords).collect();
        Self { field, matrix, offset: FpVector::zero(n) }
    }

    pub fn dim(&self) -> usize {
        self.offset.dim()
    }

    /// The map x -> A(B(x)).
    pub fn compose(&self, inner: &AffineMap) -> Result<AffineMap> {
        if self.dim() != inner.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: inner.dim() });
        }
        let f = self.field;
        let matrix = linalg::mat_mul(f, &self.matrix, &inner.matrix);
        let offset = apply_map(self, &inner.offset)?;
        Ok(AffineMap { field: f, matrix, offset })
    }

    /// Table of the induced permutation: `perm[x] = index(Ax)`.
    pub fn permutation(&self, space: &Space) -> Result<Vec<usize>> {
        if space.n != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: space.n });
        }
        let mut x = vec![0u8; space.n];
        Ok((0..space.size())
            .map(|i| {
                space.digits_into(i, &mut x);
                space.index_of(&self.apply_raw(&x))
            })
            .collect())
    }

    pub(crate) fn apply_raw(&self, x: &[u8]) -> Vec<u8> {
        let f = self.field;
        self.matrix
            .iter()
            .zip(&self.offset.coords)
            .map(|(row, &b)| row.iter().zip(x).fold(b, |acc, (&m, &xi)| f.add(acc, f.mul(m, xi))))
            .collect()
    }
}

/// Returns `matrix * x + offset`.
pub fn apply_map(map: &AffineMap, x: &FpVector) -> Result<FpVector> {
    if x.dim() != map.dim() {
        return Err(Error::DimensionMismatch { expected: map.dim(), got: x.dim() });
    }
    Ok(FpVector { coords: map.apply_raw(&x.coords) })
}

const AFFINE_RETRY_CAP: usize = 1000;

/// Uniform invertible affine map drawn from `rng` by rejection on the linear part.
pub fn random_affine_with<R: Rng + ?Sized>(field: PrimeField, n: usize, rng: &mut R) -> Result<AffineMap> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    let p = field.p();
    for _ in 0..AFFINE_RETRY_CAP {
        let matrix: Vec<Vec<u8>> =
            (0..n).map(|_| (0..n).map(|_| rng.random_range(0..p) as u8).collect()).collect();
        if linalg::rank(field, &matrix) == n {
            let offset = FpVector { coords: (0..n).map(|_| rng.random_range(0..p) as u8).collect() };
            return Ok(AffineMap { field, matrix, offset });
        }
    }
    Err(Error::Internal(format!("no invertible matrix after {AFFINE_RETRY_CAP} draws; RNG is broken")))
}

/// Uniform invertible affine map on F_p^n, deterministic in `seed`.
pub fn random_affine(p: u32, n: usize, seed: u64) -> Result<AffineMap> {
    let field = PrimeField::new(p)?;
    random_affine_with(field, n, &mut rng_from_seed(seed))
}

/// Every invertible affine map on F_p^n (budget-checked on p^(n^2 + n)).
pub fn enumerate_affine(p: u32, n: usize) -> Result<Vec<AffineMap>> {
    let field = PrimeField::new(p)?;
    check_budget(pow_u128(p as u64, n * n + n))?;
    let entries = n * n;
    let total = pow_u128(p as u64, entries) as usize;
    let offsets = pow_u128(p as u64, n) as usize;
    let space = Space { field, n, size: offsets };
    let mut out = Vec::new();
    let mut flat = vec![0u8; entries];
    for code in 0..total {
        let mut c = code;
        for slot in flat.iter_mut().rev() {
            *slot = (c % p as usize) as u8;
            c /= p as usize;
        }
        let matrix: Vec<Vec<u8>> = flat.chunks(n).map(|r| r.to_vec()).collect();
        if linalg::rank(field, &matrix) != n {
            continue;
        }
        for b in 0..offsets {
            out.push(AffineMap { field, matrix: matrix.clone(), offset: space.vector(b) });
        }
    }
    Ok(out)
}
