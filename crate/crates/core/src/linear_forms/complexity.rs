//! Cauchy–Schwarz complexity by partition search, true complexity by the
//! rank of tensor powers.

use serde::{Deserialize, Serialize};

use super::{tensor_power, LinearSystem};
use crate::error::{invalid, Error, Result};
use crate::linalg;

/// Systems larger than this get the m − 2 bound instead of a search.
pub const CS_SEARCH_MAX_FORMS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsComplexity {
    pub value: usize,
    /// True when `value` is the m − 2 upper bound rather than a search result.
    pub bound_only: bool,
    /// For each form i, a partition of the other indices into `value + 1`
    /// parts (some possibly empty) none of whose spans contains L_i.
    pub partitions: Vec<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub cs_complexity: usize,
    pub cs_bound_only: bool,
    /// None when the tensor characterization's hypothesis s <= p fails.
    pub true_complexity: Option<usize>,
    pub witness_partitions: Vec<Vec<Vec<usize>>>,
    /// Coefficients of a vanishing combination of the order-d tensor powers,
    /// d = true complexity (absent when d = 0).
    pub tensor_dependency: Option<Vec<u8>>,
    pub hypothesis_note: Option<String>,
}

fn check_pairwise_independent(sys: &LinearSystem) -> Result<()> {
    let f = sys.field();
    for i in 0..sys.m() {
        if sys.form(i).iter().all(|&c| c == 0) {
            return invalid(format!("form {i} is zero"));
        }
        for j in i + 1..sys.m() {
            if linalg::rank(f, &[sys.form(i).to_vec(), sys.form(j).to_vec()]) < 2 {
                return invalid(format!("forms {i} and {j} are linearly dependent"));
            }
        }
    }
    Ok(())
}

/// Minimal s such that for every i the other forms split into s + 1 parts
/// whose spans all miss L_i.
pub fn cs_complexity(sys: &LinearSystem) -> Result<CsComplexity> {
    check_pairwise_independent(sys)?;
    let m = sys.m();
    if m > CS_SEARCH_MAX_FORMS {
        return Ok(CsComplexity { value: m - 2, bound_only: true, partitions: vec![] });
    }
    let max_s = m.saturating_sub(2);
    for s in 0..=max_s {
        let found: Option<Vec<Vec<Vec<usize>>>> = (0..m).map(|i| separate(sys, i, s + 1)).collect();
        if let Some(partitions) = found {
            return Ok(CsComplexity { value: s, bound_only: false, partitions });
        }
    }
    Err(Error::Internal("singleton partition must separate pairwise independent forms".into()))
}

/// A partition of the forms other than `i` into `parts` groups avoiding L_i.
fn separate(sys: &LinearSystem, i: usize, parts: usize) -> Option<Vec<Vec<usize>>> {
    let others: Vec<usize> = (0..sys.m()).filter(|&j| j != i).collect();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); parts];
    fn rec(sys: &LinearSystem, target: &[u8], others: &[usize], pos: usize, groups: &mut Vec<Vec<usize>>) -> bool {
        if pos == others.len() {
            return true;
        }
        let j = others[pos];
        // Only the first empty group is tried, to skip relabelled partitions.
        let mut tried_empty = false;
        for g in 0..groups.len() {
            if groups[g].is_empty() {
                if tried_empty {
                    continue;
                }
                tried_empty = true;
            }
            groups[g].push(j);
            let rows: Vec<Vec<u8>> = groups[g].iter().map(|&t| sys.form(t).to_vec()).collect();
            if !linalg::in_span(sys.field(), &rows, target) && rec(sys, target, others, pos + 1, groups) {
                return true;
            }
            groups[g].pop();
        }
        false
    }
    rec(sys, sys.form(i), &others, 0, &mut groups).then_some(groups)
}

/// Largest tensor space the true-complexity search will build.
const TENSOR_LIMIT: u128 = 1 << 24;

/// Smallest d with L_1^{d+1}..L_m^{d+1} linearly independent. Requires the
/// Cauchy–Schwarz complexity to be at most p.
pub fn true_complexity(sys: &LinearSystem) -> Result<usize> {
    let cs = cs_complexity(sys)?;
    if cs.value > sys.p() as usize {
        let what = if cs.bound_only { "bound" } else { "value" };
        return Err(Error::Hypothesis(format!(
            "Cauchy-Schwarz complexity {what} {} exceeds p = {}",
            cs.value,
            sys.p()
        )));
    }
    tensor_search(sys).map(|(d, _)| d)
}

fn tensor_rows(sys: &LinearSystem, order: usize) -> Result<Vec<Vec<u8>>> {
    let size = crate::field::pow_u128(sys.k() as u64, order).saturating_mul(sys.m() as u128);
    if size > TENSOR_LIMIT {
        return invalid(format!("tensor powers of order {order} are too large"));
    }
    sys.forms().iter().map(|l| tensor_power(sys.field(), l, order)).collect()
}

fn tensor_search(sys: &LinearSystem) -> Result<(usize, Option<Vec<u8>>)> {
    let f = sys.field();
    let m = sys.m();
    let mut previous: Option<Vec<Vec<u8>>> = None;
    for d in 0..m {
        let rows = tensor_rows(sys, d + 1)?;
        if linalg::rank(f, &rows) == m {
            // A dependency among the order-d powers witnesses that d − 1 fails.
            let dependency = previous.and_then(|prev| linalg::nullspace(f, &linalg::transpose(&prev), m).into_iter().next());
            return Ok((d, dependency));
        }
        previous = Some(rows);
    }
    Err(Error::Internal(format!("tensor powers up to order {m} remain dependent")))
}

pub fn complexity_report(sys: &LinearSystem) -> Result<ComplexityReport> {
    let cs = cs_complexity(sys)?;
    let (true_complexity, tensor_dependency, hypothesis_note) = if cs.value > sys.p() as usize {
        (None, None, Some(format!("s = {} > p = {}: tensor characterization does not apply", cs.value, sys.p())))
    } else {
        let (d, dep) = tensor_search(sys)?;
        (Some(d), dep, None)
    };
    Ok(ComplexityReport {
        cs_complexity: cs.value,
        cs_bound_only: cs.bound_only,
        true_complexity,
        witness_partitions: cs.partitions,
        tensor_dependency,
        hypothesis_note,
    })
}
