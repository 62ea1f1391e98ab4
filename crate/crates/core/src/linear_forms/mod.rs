//! Systems of linear forms L = {L_1..L_m}, each a row of F_p^k acting on
//! (F_p^n)^k by L(x_1..x_k) = sum_j λ_j x_j.

mod complexity;
mod components;
mod flagged;
mod isomorphism;

pub use complexity::{complexity_report, cs_complexity, true_complexity, ComplexityReport, CsComplexity};
pub use components::{connected_components, is_connected, is_separator};
pub use flagged::{build_high_rank_flag, flagged_product, flagged_product_with, iterate_product, FlaggedProduct, FlaggedProductJson, FlaggedSystem, GluingChoice};
pub use isomorphism::{are_isomorphic, are_isomorphic_flagged, IsoOutcome};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::PrimeField;
use crate::linalg;

/// Rows of F_p^k. Built with [`LinearSystem::new`] the rows are pairwise
/// distinct; products of flagged systems may repeat a row, see
/// [`LinearSystem::from_multiset`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinearSystem {
    field: PrimeField,
    k: usize,
    forms: Vec<Vec<u8>>,
}

impl LinearSystem {
    pub fn new(field: PrimeField, k: usize, forms: Vec<Vec<u8>>) -> Result<Self> {
        let sys = Self::from_multiset(field, k, forms)?;
        for i in 0..sys.forms.len() {
            if sys.forms[i + 1..].contains(&sys.forms[i]) {
                return invalid(format!("form {:?} appears twice", sys.forms[i]));
            }
        }
        Ok(sys)
    }

    /// Like [`new`](Self::new) but keeps repeated rows. The product of flagged
    /// systems needs this: gluing {x}^x with itself yields the form x twice,
    /// and only then does f^{A·B} = f^A f^B hold.
    pub fn from_multiset(field: PrimeField, k: usize, forms: Vec<Vec<u8>>) -> Result<Self> {
        if forms.is_empty() {
            return invalid("a system needs at least one form");
        }
        for row in &forms {
            if row.len() != k {
                return Err(Error::DimensionMismatch { expected: k, got: row.len() });
            }
            if let Some(c) = row.iter().find(|&&c| c as u32 >= field.p()) {
                return invalid(format!("coefficient {c} out of range for p={}", field.p()));
            }
        }
        Ok(Self { field, k, forms })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn p(&self) -> u32 {
        self.field.p()
    }

    /// Number of variables.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of forms.
    pub fn m(&self) -> usize {
        self.forms.len()
    }

    pub fn forms(&self) -> &[Vec<u8>] {
        &self.forms
    }

    pub fn form(&self, i: usize) -> &[u8] {
        &self.forms[i]
    }

    pub fn has_repeats(&self) -> bool {
        (0..self.m()).any(|i| self.forms[i + 1..].contains(&self.forms[i]))
    }

    /// dim span(L).
    pub fn span_dim(&self) -> usize {
        linalg::rank(self.field, &self.forms)
    }

    pub fn in_span(&self, v: &[u8]) -> bool {
        linalg::in_span(self.field, &self.forms, v)
    }

    /// The subsystem on the given indices.
    pub fn subsystem(&self, idx: &[usize]) -> Result<LinearSystem> {
        LinearSystem::from_multiset(self.field, self.k, idx.iter().map(|&i| self.forms[i].clone()).collect())
    }

    /// Homogeneous iff some u has <L_i, u> = 1 for every i: shifting x_j by
    /// u_j c shifts every L_i(X) by c, and conversely.
    pub fn homogeneity_witness(&self) -> Option<Vec<u8>> {
        linalg::solve(self.field, &self.forms, &vec![1; self.m()])
    }

    pub fn is_homogeneous(&self) -> bool {
        self.homogeneity_witness().is_some()
    }

    /// An isomorphic system whose first variable has coefficient 1 in every
    /// form. With u as above and B an invertible matrix whose first column is
    /// u, the forms L_i B describe the same distribution after the change of
    /// variables X = B Y, and (L_i B)_1 = <L_i, u> = 1.
    pub fn canonicalize_homogeneous(&self) -> Result<LinearSystem> {
        let Some(u) = self.homogeneity_witness() else {
            return invalid("system is not homogeneous");
        };
        let order: Vec<usize> = (0..self.k).collect();
        let cols = linalg::extend_to_basis(self.field, &[u], self.k, &order);
        let b = linalg::transpose(&cols);
        let forms = linalg::mat_mul(self.field, &self.forms, &b);
        LinearSystem::from_multiset(self.field, self.k, forms)
    }
}

/// Entries ∏_j λ_{i_j} over multi-indices (i_1..i_d), last index fastest.
pub fn tensor_power(field: PrimeField, form: &[u8], d: usize) -> Result<Vec<u8>> {
    if d == 0 {
        return invalid("tensor power order must be >= 1");
    }
    let mut out = vec![1u8];
    for _ in 0..d {
        out = out.iter().flat_map(|&a| form.iter().map(move |&b| field.mul(a, b))).collect();
    }
    Ok(out)
}

/// deg_L(target): ordered pairs (i, j), i = j allowed, with L_i + L_j = target.
pub fn form_degree(system: &LinearSystem, target: &[u8]) -> usize {
    let f = system.field;
    let forms = &system.forms;
    forms
        .iter()
        .map(|x| {
            forms
                .iter()
                .filter(|y| x.iter().zip(y.iter()).zip(target).all(|((&a, &b), &t)| f.add(a, b) == t))
                .count()
        })
        .sum()
}

/// JSON form `{p, k, forms, flag?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub p: u32,
    pub k: usize,
    pub forms: Vec<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<Vec<u8>>,
}

impl SystemSpec {
    pub fn system(&self) -> Result<LinearSystem> {
        LinearSystem::new(PrimeField::new(self.p)?, self.k, self.forms.clone())
    }

    pub fn flagged(&self) -> Result<FlaggedSystem> {
        let Some(flag) = &self.flag else {
            return invalid("system spec has no flag");
        };
        FlaggedSystem::new(self.system()?, flag.clone())
    }
}

impl From<&LinearSystem> for SystemSpec {
    fn from(s: &LinearSystem) -> Self {
        SystemSpec { p: s.p(), k: s.k, forms: s.forms.clone(), flag: None }
    }
}

/// Standard example systems.
pub mod catalogue {
    use super::*;

    /// {x + a y : a = 0..len-1}, the length-`len` progression.
    pub fn progression(p: u32, len: usize) -> Result<LinearSystem> {
        let field = PrimeField::new(p)?;
        if len > p as usize {
            return invalid(format!("a {len}-term progression needs p >= {len}"));
        }
        LinearSystem::new(field, 2, (0..len).map(|a| vec![1, a as u8]).collect())
    }

    /// {x, y, x + y}.
    pub fn schur(p: u32) -> Result<LinearSystem> {
        LinearSystem::new(PrimeField::new(p)?, 2, vec![vec![1, 0], vec![0, 1], vec![1, 1]])
    }

    /// {x, x + y}.
    pub fn pair(p: u32) -> Result<LinearSystem> {
        LinearSystem::new(PrimeField::new(p)?, 2, vec![vec![1, 0], vec![1, 1]])
    }

    /// The 2^k forms x + sum_{i in S} y_i, S ⊆ [k], of the U^k cube
    /// (subsets in binary order, bit i-1 for y_i with y_1 the high bit).
    pub fn cube(p: u32, k: usize) -> Result<LinearSystem> {
        let forms = (0..1usize << k)
            .map(|s| {
                let mut row = vec![1u8];
                row.extend((0..k).map(|i| ((s >> (k - 1 - i)) & 1) as u8));
                row
            })
            .collect();
        LinearSystem::new(PrimeField::new(p)?, k + 1, forms)
    }
}
