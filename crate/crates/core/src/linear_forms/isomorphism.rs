//! Isomorphism of systems: a bijection of forms that extends to an invertible
//! linear map between the spans.

use serde::{Deserialize, Serialize};

use super::{form_degree, LinearSystem};
use crate::error::Result;
use crate::linalg;

/// Search cutoff on the number of forms.
pub const ISO_MAX_FORMS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum IsoOutcome {
    /// `witness[i]` is the index in the second system that form i maps to.
    Isomorphic { witness: Vec<usize> },
    NotIsomorphic,
    Undecided { reason: String },
}

impl IsoOutcome {
    pub fn is_isomorphic(&self) -> bool {
        matches!(self, IsoOutcome::Isomorphic { .. })
    }
}

pub fn are_isomorphic(a: &LinearSystem, b: &LinearSystem) -> Result<IsoOutcome> {
    search(a, b, None)
}

/// Isomorphism that also sends flag `fa` to flag `fb`.
pub fn are_isomorphic_flagged(a: &LinearSystem, fa: &[u8], b: &LinearSystem, fb: &[u8]) -> Result<IsoOutcome> {
    search(a, b, Some((fa, fb)))
}

/// Image of a form under a partial basis assignment.
type ImageFn<'a> = dyn Fn(&[u8], &[usize]) -> Vec<u8> + 'a;

fn degrees(sys: &LinearSystem) -> Vec<usize> {
    sys.forms().iter().map(|l| form_degree(sys, l)).collect()
}

fn search(a: &LinearSystem, b: &LinearSystem, flags: Option<(&[u8], &[u8])>) -> Result<IsoOutcome> {
    if a.p() != b.p() || a.m() != b.m() || a.span_dim() != b.span_dim() {
        return Ok(IsoOutcome::NotIsomorphic);
    }
    let (da, db) = (degrees(a), degrees(b));
    let (mut sa, mut sb) = (da.clone(), db.clone());
    sa.sort_unstable();
    sb.sort_unstable();
    if sa != sb {
        return Ok(IsoOutcome::NotIsomorphic);
    }
    if a.m() > ISO_MAX_FORMS {
        return Ok(IsoOutcome::Undecided { reason: format!("{} forms exceeds the search cutoff {ISO_MAX_FORMS}", a.m()) });
    }
    let f = a.field();
    let basis = linalg::basis_indices(f, a.forms());
    let basis_rows: Vec<Vec<u8>> = basis.iter().map(|&i| a.form(i).to_vec()).collect();
    // Coordinates of every form (and the flag) in the chosen basis.
    let coords: Vec<Vec<u8>> = a.forms().iter().map(|l| linalg::express(f, &basis_rows, l).expect("form lies in span")).collect();
    let flag_coords = match flags {
        Some((fa, _)) => match linalg::express(f, &basis_rows, fa) {
            Some(c) => Some(c),
            None => return Ok(IsoOutcome::NotIsomorphic),
        },
        None => None,
    };
    let last_used: Vec<usize> = coords.iter().map(|c| c.iter().rposition(|&x| x != 0).unwrap_or(0)).collect();

    let r = basis.len();
    let mut images: Vec<usize> = Vec::with_capacity(r);
    let image_of = |c: &[u8], images: &[usize]| -> Vec<u8> {
        let mut out = vec![0u8; b.k()];
        for (&ci, &j) in c.iter().zip(images) {
            for (o, &x) in out.iter_mut().zip(b.form(j)) {
                *o = f.add(*o, f.mul(ci, x));
            }
        }
        out
    };

    fn rec(
        depth: usize,
        images: &mut Vec<usize>,
        ctx: &Ctx<'_>,
        image_of: &ImageFn<'_>,
    ) -> Option<Vec<usize>> {
        let Ctx { a, b, basis, coords, last_used, da, db, flag_coords, flags } = *ctx;
        if depth == basis.len() {
            // Images of all forms must match the second system as multisets.
            let mut used = vec![false; b.m()];
            let mut witness = Vec::with_capacity(a.m());
            for c in coords {
                let img = image_of(c, images);
                let j = (0..b.m()).find(|&j| !used[j] && b.form(j) == img.as_slice())?;
                used[j] = true;
                witness.push(j);
            }
            if let (Some(fc), Some((_, fb))) = (flag_coords, flags) {
                if image_of(fc, images) != fb {
                    return None;
                }
            }
            return Some(witness);
        }
        let src = basis[depth];
        for j in 0..b.m() {
            if db[j] != da[src] || images.contains(&j) {
                continue;
            }
            let mut rows: Vec<Vec<u8>> = images.iter().map(|&t| b.form(t).to_vec()).collect();
            rows.push(b.form(j).to_vec());
            if linalg::rank(a.field(), &rows) < rows.len() {
                continue;
            }
            images.push(j);
            // Every form whose coordinates are now fully assigned must land on
            // some form of the same degree.
            let ok = coords.iter().enumerate().filter(|(i, _)| last_used[*i] == depth).all(|(i, c)| {
                let img = image_of(&c[..=depth], images);
                (0..b.m()).any(|t| b.form(t) == img.as_slice() && db[t] == da[i])
            });
            if ok {
                if let Some(w) = rec(depth + 1, images, ctx, image_of) {
                    return Some(w);
                }
            }
            images.pop();
        }
        None
    }

    struct Ctx<'a> {
        a: &'a LinearSystem,
        b: &'a LinearSystem,
        basis: &'a [usize],
        coords: &'a [Vec<u8>],
        last_used: &'a [usize],
        da: &'a [usize],
        db: &'a [usize],
        flag_coords: Option<&'a Vec<u8>>,
        flags: Option<(&'a [u8], &'a [u8])>,
    }
    impl Clone for Ctx<'_> {
        fn clone(&self) -> Self {
            *self
        }
    }
    impl Copy for Ctx<'_> {}

    let ctx = Ctx { a, b, basis: &basis, coords: &coords, last_used: &last_used, da: &da, db: &db, flag_coords: flag_coords.as_ref(), flags };
    Ok(match rec(0, &mut images, &ctx, &image_of) {
        Some(witness) => IsoOutcome::Isomorphic { witness },
        None => IsoOutcome::NotIsomorphic,
    })
}
