//! Fourier transform on F_p^n: f̂(α) = E_x f(x) e_p(−α·x), computed one axis
//! at a time (Walsh–Hadamard butterflies when p = 2).

use num_complex::Complex64;

use super::table::{derived, FunctionTable};
use crate::field::Space;
use crate::par;

/// f̂ indexed like the function table (α in enumeration order).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    space: Space,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    /// max_α |f̂(α)| = ‖f‖_{u(Linear)}, with an argmax (lowest index on ties).
    pub fn max_abs(&self) -> (f64, usize) {
        self.coeffs.iter().enumerate().fold((-1.0, 0), |(best, at), (i, z)| if z.norm() > best { (z.norm(), i) } else { (best, at) })
    }

    /// Σ_α |f̂(α)|^2.
    pub fn energy(&self) -> f64 {
        par::real_sum(self.coeffs.iter().map(|z| z.norm_sqr()))
    }

    /// Σ_α |f̂(α)|^4 = ‖f‖_{U^2}^4.
    pub fn fourth_moment(&self) -> f64 {
        par::real_sum(self.coeffs.iter().map(|z| z.norm_sqr() * z.norm_sqr()))
    }

    /// `index,re,im` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,re,im\n");
        for (i, z) in self.coeffs.iter().enumerate() {
            out.push_str(&format!("{i},{},{}\n", z.re, z.im));
        }
        out
    }
}

/// In-place unnormalized transform along every axis: v[α] <- Σ_x v[x] ω^{s α·x}
/// with s = −1 (forward) or +1 (inverse).
pub(crate) fn dft_in_place(space: &Space, data: &mut [Complex64], sign: i64) {
    let p = space.p() as usize;
    let field = space.field;
    let roots = field.roots();
    let root = |e: usize| {
        let e = if sign < 0 { (p - e % p) % p } else { e % p };
        roots[e]
    };
    let mut stride = 1usize;
    for _ in 0..space.n {
        let block = stride * p;
        par::for_each_block_mut(data, block, |_, chunk| {
            let mut line = vec![Complex64::new(0.0, 0.0); p];
            for off in 0..stride {
                for (t, slot) in line.iter_mut().enumerate() {
                    *slot = chunk[off + t * stride];
                }
                if p == 2 {
                    chunk[off] = line[0] + line[1];
                    chunk[off + stride] = line[0] - line[1];
                } else {
                    for a in 0..p {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for (t, &v) in line.iter().enumerate() {
                            acc += v * root(a * t);
                        }
                        chunk[off + a * stride] = acc;
                    }
                }
            }
        });
        stride = block;
    }
}

pub fn fourier_transform(f: &FunctionTable) -> Spectrum {
    let mut coeffs = f.values().to_vec();
    dft_in_place(f.space(), &mut coeffs, -1);
    let scale = 1.0 / f.len() as f64;
    for z in coeffs.iter_mut() {
        *z *= scale;
    }
    Spectrum { space: *f.space(), coeffs }
}

/// f(x) = Σ_α f̂(α) e_p(α·x).
pub fn inverse_fourier(spec: &Spectrum) -> FunctionTable {
    let mut values = spec.coeffs.clone();
    dft_in_place(&spec.space, &mut values, 1);
    derived(spec.space, values)
}

/// ‖f‖_{u(Linear)} = max_α |f̂(α)|.
pub fn linear_correlation(f: &FunctionTable) -> f64 {
    fourier_transform(f).max_abs().0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::inner_product;
    use crate::field::{rng_from_seed, PrimeField};
    use crate::polynomials::Polynomial;

    fn f(p: u32) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn constant_one() {
        let one = FunctionTable::constant(f(3), 2, Complex64::new(1.0, 0.0)).unwrap();
        let s = fourier_transform(&one);
        assert!((s.coeffs()[0] - 1.0).norm() < 1e-12);
        assert!(s.coeffs()[1..].iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn single_character() {
        let x1 = FunctionTable::from_polynomial(&Polynomial::parse(f(2), 1, "x1").unwrap()).unwrap();
        let s = fourier_transform(&x1);
        assert!(s.coeffs()[0].norm() < 1e-15);
        assert!((s.coeffs()[1] - 1.0).norm() < 1e-15);
    }

    #[test]
    fn matches_direct_inner_products_and_inverts() {
        let mut rng = rng_from_seed(5);
        for p in [2, 3, 5] {
            let field = f(p);
            let n = 2;
            let g = FunctionTable::random_disk(field, n, &mut rng).unwrap();
            let s = fourier_transform(&g);
            let space = g.space();
            for a in 0..space.size() {
                let chi: Vec<u8> = (0..space.size()).map(|x| space.dot(a, x)).collect();
                let chi = FunctionTable::from_field(field, n, chi).unwrap();
                assert!((inner_product(&g, &chi).unwrap() - s.coeffs()[a]).norm() < 1e-12);
            }
            assert!((s.energy() - g.l2_squared()).abs() < 1e-9);
            assert!(inverse_fourier(&s).max_abs_diff(&g) < 1e-12);
        }
    }
}
