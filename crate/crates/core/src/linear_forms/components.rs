//! Connected components: the finest partition of the forms into parts whose
//! spans form a direct sum. These are the components of the linear matroid on
//! the forms, obtained by merging each fundamental circuit.

use super::LinearSystem;
use crate::error::{Error, Result};
use crate::linalg;

/// Exhaustive verification runs on systems up to this size.
pub const VERIFY_MAX_FORMS: usize = 12;

/// Whether span(S) ∩ span(L \ S) = {0}, i.e. the ranks add up.
pub fn is_separator(sys: &LinearSystem, subset: &[usize]) -> bool {
    let f = sys.field();
    let (inside, outside): (Vec<Vec<u8>>, Vec<Vec<u8>>) = {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (i, row) in sys.forms().iter().enumerate() {
            if subset.contains(&i) {
                a.push(row.clone());
            } else {
                b.push(row.clone());
            }
        }
        (a, b)
    };
    linalg::rank(f, &inside) + linalg::rank(f, &outside) == sys.span_dim()
}

/// Components as sorted index lists, ordered by smallest member.
pub fn connected_components(sys: &LinearSystem) -> Result<Vec<Vec<usize>>> {
    let f = sys.field();
    let m = sys.m();
    let basis = linalg::basis_indices(f, sys.forms());
    let basis_rows: Vec<Vec<u8>> = basis.iter().map(|&b| sys.form(b).to_vec()).collect();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut y = x;
        while parent[y] != r {
            let next = parent[y];
            parent[y] = r;
            y = next;
        }
        r
    }
    for e in (0..m).filter(|e| !basis.contains(e)) {
        let coef = linalg::express(f, &basis_rows, sys.form(e)).ok_or_else(|| Error::Internal("form outside span of basis".into()))?;
        for (&b, &c) in basis.iter().zip(&coef) {
            if c != 0 {
                let (rb, re) = (find(&mut parent, b), find(&mut parent, e));
                parent[rb.max(re)] = rb.min(re);
            }
        }
    }
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut root_of = vec![usize::MAX; m];
    for i in 0..m {
        let r = find(&mut parent, i);
        if root_of[r] == usize::MAX {
            root_of[r] = comps.len();
            comps.push(Vec::new());
        }
        comps[root_of[r]].push(i);
    }
    if m <= VERIFY_MAX_FORMS {
        verify(sys, &comps)?;
    }
    Ok(comps)
}

/// Every component separates, and no proper nonempty subset of a component
/// separates the component's own subsystem.
fn verify(sys: &LinearSystem, comps: &[Vec<usize>]) -> Result<()> {
    for comp in comps {
        if comps.len() > 1 && !is_separator(sys, comp) {
            return Err(Error::Internal(format!("component {comp:?} does not separate")));
        }
        let sub = sys.subsystem(comp)?;
        let c = comp.len();
        for mask in 1..(1usize << c) - 1 {
            let subset: Vec<usize> = (0..c).filter(|&i| mask >> i & 1 == 1).collect();
            if is_separator(&sub, &subset) {
                return Err(Error::Internal(format!("component {comp:?} splits further")));
            }
        }
    }
    Ok(())
}

pub fn is_connected(sys: &LinearSystem) -> Result<bool> {
    Ok(connected_components(sys)?.len() == 1)
}
