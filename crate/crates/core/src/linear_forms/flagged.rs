//! Flagged systems L^M, their gluing product, and the high-rank building block.

use serde::{Deserialize, Serialize};

use super::{components, form_degree, LinearSystem};
use crate::error::{invalid, Error, Result};
use crate::field::PrimeField;
use crate::linalg::{self, Matrix};

/// A system with a distinguished nonzero form in its span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlaggedSystem {
    system: LinearSystem,
    flag: Vec<u8>,
}

impl FlaggedSystem {
    pub fn new(system: LinearSystem, flag: Vec<u8>) -> Result<Self> {
        if flag.len() != system.k() {
            return Err(Error::DimensionMismatch { expected: system.k(), got: flag.len() });
        }
        if flag.iter().all(|&c| c == 0) {
            return invalid("flag must be nonzero");
        }
        if !system.in_span(&flag) {
            return invalid(format!("flag {flag:?} is not in the span of the system"));
        }
        Ok(Self { system, flag })
    }

    pub fn system(&self) -> &LinearSystem {
        &self.system
    }

    pub fn flag(&self) -> &[u8] {
        &self.flag
    }

    pub fn field(&self) -> PrimeField {
        self.system.field()
    }
}

/// Which surjection T to glue with. Both send the two flag copies to e_1 of
/// the target space; they differ in how the rest of the basis is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GluingChoice {
    #[default]
    Standard,
    Alternate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlaggedProduct {
    pub product: FlaggedSystem,
    /// Indices of the copy of the left factor inside the product.
    pub copy_a: Vec<usize>,
    /// Indices of the copy of the right factor.
    pub copy_b: Vec<usize>,
    /// T as a (k0 + k1) × (k0 + k1 − 1) matrix acting on row vectors.
    pub gluing_map: Matrix,
}

pub fn flagged_product(a: &FlaggedSystem, b: &FlaggedSystem) -> Result<FlaggedProduct> {
    flagged_product_with(a, b, GluingChoice::Standard)
}

/// Embeds A and B in F_p^{k0+k1} as L ⊕ 0 and 0 ⊕ L, then applies a
/// surjection T onto F_p^{k0+k1−1} whose kernel is spanned by (M0, −M1), so
/// both flag copies land on the same form M = e_1. The forms are kept as a
/// multiset.
pub fn flagged_product_with(a: &FlaggedSystem, b: &FlaggedSystem, choice: GluingChoice) -> Result<FlaggedProduct> {
    let f = a.field();
    if f != b.field() {
        return invalid("flagged systems over different fields");
    }
    let (k0, k1) = (a.system.k(), b.system.k());
    let k = k0 + k1;
    let left = |v: &[u8]| -> Vec<u8> { v.iter().copied().chain(std::iter::repeat_n(0, k1)).collect() };
    let right = |v: &[u8]| -> Vec<u8> { std::iter::repeat_n(0, k0).chain(v.iter().copied()).collect() };
    let va = left(&a.flag);
    let vb = right(&b.flag);
    let kernel: Vec<u8> = va.iter().zip(&vb).map(|(&x, &y)| f.sub(x, y)).collect();
    let (first, order): (Vec<u8>, Vec<usize>) = match choice {
        GluingChoice::Standard => (va.clone(), (0..k).collect()),
        GluingChoice::Alternate => (vb.clone(), (0..k).rev().collect()),
    };
    let basis = linalg::extend_to_basis(f, &[first, kernel], k, &order);
    debug_assert_eq!(basis.len(), k);
    let inv = linalg::inverse(f, &basis).ok_or_else(|| Error::Internal("gluing basis is singular".into()))?;
    // x = c · basis  =>  c = x · inv; T keeps every coordinate except the kernel's.
    let gluing_map: Matrix = inv.iter().map(|row| row.iter().enumerate().filter(|&(j, _)| j != 1).map(|(_, &x)| x).collect()).collect();
    let apply = |v: Vec<u8>| linalg::vec_mat(f, &v, &gluing_map);

    let mut forms = Vec::with_capacity(a.system.m() + b.system.m());
    forms.extend(a.system.forms().iter().map(|l| apply(left(l))));
    forms.extend(b.system.forms().iter().map(|l| apply(right(l))));
    let flag = apply(va);
    debug_assert_eq!(flag, apply(vb));
    let system = LinearSystem::from_multiset(f, k - 1, forms)?;
    let m0 = a.system.m();
    Ok(FlaggedProduct {
        product: FlaggedSystem::new(system, flag)?,
        copy_a: (0..m0).collect(),
        copy_b: (m0..m0 + b.system.m()).collect(),
        gluing_map,
    })
}

/// base · base · … · base (`times` factors, left to right).
pub fn iterate_product(base: &FlaggedSystem, times: usize) -> Result<FlaggedSystem> {
    if times == 0 {
        return invalid("need at least one factor");
    }
    let mut acc = base.clone();
    for _ in 1..times {
        acc = flagged_product(&acc, base)?.product;
    }
    Ok(acc)
}

/// Caps on the high-rank construction.
pub const HIGH_RANK_MAX_D: usize = 4;
pub const HIGH_RANK_MAX_P: u32 = 3;

/// The block M = ({0} × F_p^{d−1}) ∪ ({1} × {0,1}^{d−1}) minus {0, e_1},
/// flagged by e_1. Its properties (connectivity, degree bounds) are checked
/// before returning.
pub fn build_high_rank_flag(p: u32, d: usize) -> Result<FlaggedSystem> {
    let field = PrimeField::new(p)?;
    if p > HIGH_RANK_MAX_P || d > HIGH_RANK_MAX_D {
        return invalid(format!("construction capped at p <= {HIGH_RANK_MAX_P}, d <= {HIGH_RANK_MAX_D}"));
    }
    if d < 3 {
        // At d = 2 the block is {(0,λ)} ∪ {(1,1)}, which is disconnected.
        return invalid("d must be at least 3 for the block to be connected");
    }
    let space = crate::field::Space::new(field, d)?;
    let forms: Vec<Vec<u8>> = (0..space.size())
        .map(|i| space.vector(i).coords)
        .filter(|v| {
            let zero = v.iter().all(|&c| c == 0);
            let e1 = v[0] == 1 && v[1..].iter().all(|&c| c == 0);
            let member = v[0] == 0 || (v[0] == 1 && v[1..].iter().all(|&c| c <= 1));
            member && !zero && !e1
        })
        .collect();
    let system = LinearSystem::new(field, d, forms)?;
    let mut e1 = vec![0u8; d];
    e1[0] = 1;

    if !components::is_connected(&system)? {
        return Err(Error::Internal("high-rank block is not connected".into()));
    }
    let lo = 1usize << (d - 1);
    let hi = 4 * (p as usize).pow(d as u32 - 1);
    for l in system.forms() {
        let deg = form_degree(&system, l);
        if deg < lo || deg > hi {
            return Err(Error::Internal(format!("deg of {l:?} is {deg}, outside [{lo}, {hi}]")));
        }
    }
    if form_degree(&system, &e1) != 2 * (lo - 1) {
        return Err(Error::Internal("deg(e_1) differs from 2(2^{d-1} - 1)".into()));
    }
    for lambda in 2..p as u8 {
        let v: Vec<u8> = e1.iter().map(|&c| field.mul(c, lambda)).collect();
        if form_degree(&system, &v) != 0 {
            return Err(Error::Internal(format!("deg({lambda} e_1) is nonzero")));
        }
    }
    FlaggedSystem::new(system, e1)
}

/// JSON mirror of a product for reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlaggedProductJson {
    pub p: u32,
    pub k: usize,
    pub forms: Vec<Vec<u8>>,
    pub flag: Vec<u8>,
    pub copy_a: Vec<usize>,
    pub copy_b: Vec<usize>,
}

impl From<&FlaggedProduct> for FlaggedProductJson {
    fn from(fp: &FlaggedProduct) -> Self {
        let s = fp.product.system();
        FlaggedProductJson {
            p: s.p(),
            k: s.k(),
            forms: s.forms().to_vec(),
            flag: fp.product.flag().to_vec(),
            copy_a: fp.copy_a.clone(),
            copy_b: fp.copy_b.clone(),
        }
    }
}
