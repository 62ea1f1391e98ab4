//! Dense linear algebra over F_p with deterministic pivoting.

use crate::field::PrimeField;

pub type Matrix = Vec<Vec<u8>>;

/// Reduced row echelon form. Pivots are chosen as the first nonzero entry in
/// column order, so the output depends only on the input rows.
pub fn rref(f: PrimeField, rows: &[Vec<u8>]) -> (Matrix, Vec<usize>) {
    let mut m: Matrix = rows.to_vec();
    let ncols = m.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        let Some(piv) = (r..m.len()).find(|&i| m[i][c] != 0) else { continue };
        m.swap(r, piv);
        let inv = f.inv(m[r][c]).expect("pivot is nonzero");
        for x in m[r].iter_mut() {
            *x = f.mul(*x, inv);
        }
        let pivot_row = std::mem::take(&mut m[r]);
        for row in m.iter_mut() {
            if !row.is_empty() && row[c] != 0 {
                let factor = row[c];
                for (x, &y) in row.iter_mut().zip(&pivot_row) {
                    *x = f.sub(*x, f.mul(factor, y));
                }
            }
        }
        m[r] = pivot_row;
        pivots.push(c);
        r += 1;
    }
    m.truncate(r.max(pivots.len()));
    (m, pivots)
}

pub fn rank(f: PrimeField, rows: &[Vec<u8>]) -> usize {
    rref(f, rows).1.len()
}

/// Whether `v` lies in the row span of `rows`.
pub fn in_span(f: PrimeField, rows: &[Vec<u8>], v: &[u8]) -> bool {
    if v.iter().all(|&x| x == 0) {
        return true;
    }
    if rows.is_empty() {
        return false;
    }
    let mut ext = rows.to_vec();
    ext.push(v.to_vec());
    rank(f, &ext) == rank(f, rows)
}

/// Some x with `a x = b`, where `a` is m x k and `b` has length m.
pub fn solve(f: PrimeField, a: &[Vec<u8>], b: &[u8]) -> Option<Vec<u8>> {
    let k = a.first().map_or(0, |r| r.len());
    let aug: Matrix = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    if aug.is_empty() {
        return Some(vec![0; k]);
    }
    let (red, pivots) = rref(f, &aug);
    if pivots.last() == Some(&k) {
        return None;
    }
    let mut x = vec![0u8; k];
    for (row, &c) in red.iter().zip(&pivots) {
        x[c] = row[k];
    }
    Some(x)
}

/// Basis of the kernel {x : a x = 0}.
pub fn nullspace(f: PrimeField, a: &[Vec<u8>], k: usize) -> Matrix {
    let (red, pivots) = if a.is_empty() { (Vec::new(), Vec::new()) } else { rref(f, a) };
    let free: Vec<usize> = (0..k).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut x = vec![0u8; k];
            x[fc] = 1;
            for (row, &pc) in red.iter().zip(&pivots) {
                x[pc] = f.neg(row[fc]);
            }
            x
        })
        .collect()
}

/// Coefficients c with `sum_j c_j rows[j] = v`, if any.
pub fn express(f: PrimeField, rows: &[Vec<u8>], v: &[u8]) -> Option<Vec<u8>> {
    if rows.is_empty() {
        return v.iter().all(|&x| x == 0).then(Vec::new);
    }
    solve(f, &transpose(rows), v)
}

pub fn transpose(a: &[Vec<u8>]) -> Matrix {
    let cols = a.first().map_or(0, |r| r.len());
    (0..cols).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

pub fn mat_mul(f: PrimeField, a: &[Vec<u8>], b: &[Vec<u8>]) -> Matrix {
    let cols = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| row.iter().zip(b).fold(0u8, |acc, (&x, brow)| f.add(acc, f.mul(x, brow[j]))))
                .collect()
        })
        .collect()
}

/// Row vector times matrix.
pub fn vec_mat(f: PrimeField, v: &[u8], m: &[Vec<u8>]) -> Vec<u8> {
    mat_mul(f, &[v.to_vec()], m).pop().unwrap_or_default()
}

pub fn inverse(f: PrimeField, a: &[Vec<u8>]) -> Option<Matrix> {
    let n = a.len();
    let aug: Matrix = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| u8::from(i == j)));
            r
        })
        .collect();
    let (red, pivots) = rref(f, &aug);
    if pivots.len() < n || pivots[n - 1] >= n {
        return None;
    }
    Some(red.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Indices of a maximal independent subset of `rows`, chosen greedily in order.
pub fn basis_indices(f: PrimeField, rows: &[Vec<u8>]) -> Vec<usize> {
    let mut chosen: Matrix = Vec::new();
    let mut idx = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        if !in_span(f, &chosen, r) {
            chosen.push(r.clone());
            idx.push(i);
        }
    }
    idx
}

/// Extends independent `vecs` to a basis of F_p^dim using standard vectors
/// taken in the order given by `order`.
pub fn extend_to_basis(f: PrimeField, vecs: &[Vec<u8>], dim: usize, order: &[usize]) -> Matrix {
    let mut basis = vecs.to_vec();
    for &i in order {
        if basis.len() == dim {
            break;
        }
        let mut e = vec![0u8; dim];
        e[i] = 1;
        if !in_span(f, &basis, &e) {
            basis.push(e);
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u32) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn rank_of_three_term_progression_forms() {
        let rows = vec![vec![1, 0], vec![1, 1], vec![1, 2]];
        assert_eq!(rank(f(3), &rows), 2);
        assert!(in_span(f(3), &rows[1..], &rows[0]));
    }

    #[test]
    fn solve_and_nullspace() {
        let a = vec![vec![1, 2, 0], vec![0, 1, 1]];
        let x = solve(f(5), &a, &[3, 4]).unwrap();
        assert_eq!(mat_mul(f(5), &a, &transpose(&[x])), vec![vec![3], vec![4]]);
        let ns = nullspace(f(5), &a, 3);
        assert_eq!(ns.len(), 1);
        assert_eq!(mat_mul(f(5), &a, &transpose(&ns)), vec![vec![0], vec![0]]);
        assert!(solve(f(3), &[vec![1, 0], vec![2, 0]], &[1, 1]).is_none());
    }

    #[test]
    fn inverse_roundtrip() {
        let a = vec![vec![2, 1], vec![1, 1]];
        let inv = inverse(f(7), &a).unwrap();
        assert_eq!(mat_mul(f(7), &a, &inv), vec![vec![1, 0], vec![0, 1]]);
        assert!(inverse(f(7), &[vec![1, 2], vec![2, 4]]).is_none());
    }

    #[test]
    fn express_in_basis() {
        let rows = vec![vec![1, 0, 1], vec![0, 1, 1]];
        let c = express(f(2), &rows, &[1, 1, 0]).unwrap();
        assert_eq!(c, vec![1, 1]);
        assert!(express(f(2), &rows, &[1, 0, 0]).is_none());
    }
}
