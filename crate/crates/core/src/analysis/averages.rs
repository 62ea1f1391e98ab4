//! Averages over systems of linear forms: t_L, t_{L,α}, t*_{L,β}, per-form
//! averages, flagged (conditional) averages and boundary functions.
//!
//! Exact enumeration walks X ∈ (F_p^n)^k coordinate by coordinate: the c-th
//! coordinates of X_1..X_k form a vector u_c ∈ F_p^k, and the c-th digit of
//! L_i(X) is L_i(u_c). With L_i(u) tabulated for all u, every point index is
//! an incremental sum of digit · p^{n−1−c}.

use num_complex::Complex64;
use rand::Rng;

use super::table::{derived, FunctionTable};
use crate::error::{invalid, Error, Result};
use crate::estimate::{ComplexMoments, Estimate, Mode};
use crate::field::{check_budget, pow_u128, substream, PrimeField, Space};
use crate::linear_forms::{FlaggedSystem, LinearSystem};
use crate::par::{self, ComplexSum};

/// Monte Carlo samples per RNG substream.
pub(crate) const MC_CHUNK: u64 = 4096;

/// Enumerates X ∈ (F_p^n)^k in fixed chunks and hands the point indices
/// (L_1(X), .., L_m(X)) to a visitor.
pub(crate) struct FormWalker {
    p: usize,
    n: usize,
    m: usize,
    pk: usize,
    /// digits[u * m + i] = L_i(u).
    digits: Vec<u8>,
    weights: Vec<usize>,
    prefix_levels: usize,
    prefix_count: usize,
    chunks: usize,
}

impl FormWalker {
    pub fn new(field: PrimeField, n: usize, k: usize, forms: &[Vec<u8>], target_chunks: usize) -> Result<Self> {
        let p = field.p() as usize;
        check_budget(pow_u128(p as u64, n * k))?;
        let pk = p.pow(k as u32);
        let m = forms.len();
        let mut digits = vec![0u8; pk * m];
        let mut u = vec![0u8; k];
        for idx in 0..pk {
            let mut rest = idx;
            for slot in u.iter_mut().rev() {
                *slot = (rest % p) as u8;
                rest /= p;
            }
            for (i, form) in forms.iter().enumerate() {
                digits[idx * m + i] = form.iter().zip(&u).fold(0u8, |acc, (&l, &x)| field.add(acc, field.mul(l, x)));
            }
        }
        let weights = (0..n).map(|c| p.pow((n - 1 - c) as u32)).collect();
        let mut prefix_levels = 0;
        let mut prefix_count = 1usize;
        while prefix_levels < n && prefix_count < target_chunks {
            prefix_levels += 1;
            prefix_count *= pk;
        }
        let chunks = prefix_count.min(target_chunks.max(1));
        Ok(Self { p, n, m, pk, digits, weights, prefix_levels, prefix_count, chunks })
    }

    pub fn chunks(&self) -> usize {
        self.chunks
    }

    /// Number of tuples visited in total, p^{nk}.
    pub fn total(&self) -> usize {
        self.pk.pow(self.n as u32)
    }

    pub fn walk_chunk(&self, chunk: usize, visit: &mut dyn FnMut(&[usize])) {
        let m = self.m;
        let lo = chunk * self.prefix_count / self.chunks;
        let hi = (chunk + 1) * self.prefix_count / self.chunks;
        let mut partial = vec![0usize; m * (self.n + 1)];
        let mut prefix = vec![0usize; self.prefix_levels];
        for q in lo..hi {
            let mut rest = q;
            for slot in prefix.iter_mut().rev() {
                *slot = rest % self.pk;
                rest /= self.pk;
            }
            for (c, &u) in prefix.iter().enumerate() {
                for i in 0..m {
                    partial[(c + 1) * m + i] = partial[c * m + i] + self.digits[u * m + i] as usize * self.weights[c];
                }
            }
            if self.prefix_levels == self.n {
                visit(&partial[self.n * m..]);
            } else {
                self.descend(self.prefix_levels, &mut partial, visit);
            }
        }
    }

    fn descend(&self, c: usize, partial: &mut [usize], visit: &mut dyn FnMut(&[usize])) {
        let m = self.m;
        let w = self.weights[c];
        for u in 0..self.pk {
            let d = &self.digits[u * m..(u + 1) * m];
            for i in 0..m {
                partial[(c + 1) * m + i] = partial[c * m + i] + d[i] as usize * w;
            }
            if c + 1 == self.n {
                visit(&partial[self.n * m..(self.n + 1) * m]);
            } else {
                self.descend(c + 1, partial, visit);
            }
        }
    }

    #[allow(dead_code)]
    pub fn p(&self) -> usize {
        self.p
    }
}

/// E_X ∏_i h_i(L_i(X)) by exact enumeration.
pub(crate) fn product_average(space: &Space, k: usize, forms: &[Vec<u8>], tables: &[&[Complex64]]) -> Result<Complex64> {
    let walker = FormWalker::new(space.field, space.n, k, forms, 256)?;
    let parts = par::map_indexed(walker.chunks(), |c| {
        let mut acc = ComplexSum::new();
        walker.walk_chunk(c, &mut |idx| {
            let mut prod = Complex64::new(1.0, 0.0);
            for (t, &x) in tables.iter().zip(idx) {
                prod *= t[x];
            }
            acc.add(prod);
        });
        acc
    });
    let mut total = ComplexSum::new();
    for part in &parts {
        total.merge(part);
    }
    Ok(total.value() / walker.total() as f64)
}

/// E_X e_p(Σ_i β_i r_i(L_i(X))) by counting residues exactly.
pub(crate) fn residue_average(space: &Space, k: usize, forms: &[Vec<u8>], tables: &[&[u8]], beta: &[u8]) -> Result<Complex64> {
    let field = space.field;
    let p = field.p() as usize;
    let walker = FormWalker::new(field, space.n, k, forms, 256)?;
    let parts = par::map_indexed(walker.chunks(), |c| {
        let mut counts = vec![0u64; p];
        walker.walk_chunk(c, &mut |idx| {
            let mut s = 0usize;
            for ((t, &x), &b) in tables.iter().zip(idx).zip(beta) {
                s += b as usize * t[x] as usize;
            }
            counts[s % p] += 1;
        });
        counts
    });
    let mut counts = vec![0u64; p];
    for part in parts {
        for (a, b) in counts.iter_mut().zip(part) {
            *a += b;
        }
    }
    let roots = field.roots();
    let total = walker.total() as f64;
    Ok(par::complex_sum(counts.iter().zip(&roots).map(|(&c, &r)| r * c as f64)) / total)
}

/// x ↦ E[∏_i h_i(L_i(X)) | M(X) = x] for a nonzero form M (not necessarily in
/// the span of the L_i).
pub(crate) fn conditional_average(space: &Space, k: usize, forms: &[Vec<u8>], tables: &[&[Complex64]], cond: &[u8]) -> Result<Vec<Complex64>> {
    if cond.iter().all(|&c| c == 0) {
        return invalid("conditioning form must be nonzero");
    }
    let mut all = forms.to_vec();
    all.push(cond.to_vec());
    let size = space.size();
    let target = (1usize << 22).div_ceil(size.max(1)).clamp(1, 64);
    let walker = FormWalker::new(space.field, space.n, k, &all, target)?;
    let m = forms.len();
    let parts = par::map_indexed(walker.chunks(), |c| {
        let mut buckets = vec![ComplexSum::new(); size];
        walker.walk_chunk(c, &mut |idx| {
            let mut prod = Complex64::new(1.0, 0.0);
            for (t, &x) in tables.iter().zip(&idx[..m]) {
                prod *= t[x];
            }
            buckets[idx[m]].add(prod);
        });
        buckets
    });
    let mut totals = vec![ComplexSum::new(); size];
    for part in &parts {
        for (a, b) in totals.iter_mut().zip(part) {
            a.merge(b);
        }
    }
    // Each value of M(X) is hit by exactly p^{n(k−1)} tuples.
    let per_bucket = (walker.total() / size) as f64;
    Ok(totals.iter().map(|s| s.value() / per_bucket).collect())
}

/// Monte Carlo estimate of E_X ∏_i h_i(L_i(X)).
pub(crate) fn mc_product_average(
    space: &Space,
    forms: &[Vec<u8>],
    tables: &[&[Complex64]],
    samples: u64,
    seed: u64,
) -> Estimate<Complex64> {
    let field = space.field;
    let p = field.p();
    let n = space.n;
    let k = forms.first().map_or(0, |f| f.len());
    let chunks = samples.div_ceil(MC_CHUNK) as usize;
    let parts = par::map_indexed(chunks, |c| {
        let mut rng = substream(seed, c as u64);
        let count = MC_CHUNK.min(samples - c as u64 * MC_CHUNK);
        let mut mom = ComplexMoments::default();
        let mut u = vec![0u8; k];
        let mut idx = vec![0usize; forms.len()];
        for _ in 0..count {
            idx.fill(0);
            for _ in 0..n {
                for slot in u.iter_mut() {
                    *slot = rng.random_range(0..p) as u8;
                }
                for (i, form) in forms.iter().enumerate() {
                    let d = form.iter().zip(&u).fold(0u8, |acc, (&l, &x)| field.add(acc, field.mul(l, x)));
                    idx[i] = idx[i] * p as usize + d as usize;
                }
            }
            let mut prod = Complex64::new(1.0, 0.0);
            for (t, &x) in tables.iter().zip(&idx) {
                prod *= t[x];
            }
            mom.push(prod);
        }
        mom
    });
    let mut total = ComplexMoments::default();
    for part in &parts {
        total.merge(part);
    }
    Estimate { value: total.mean(), std_error: Some(total.std_error()), mode: Mode::mc(samples, seed) }
}

/// What is averaged over the forms.
#[derive(Debug, Clone, Copy)]
pub enum Payload<'a> {
    /// t_L(f) = E ∏ f(L_i(X)).
    Plain(&'a FunctionTable),
    /// t_{L,α}(f): form i is conjugated when α(i) is set.
    Conjugated(&'a FunctionTable, &'a [bool]),
    /// t*_{L,β}(f) = E e_p(Σ β(i) f(L_i(X))) for field-valued f.
    Coefficients(&'a FunctionTable, &'a [u8]),
    /// E ∏ f_i(L_i(X)).
    PerForm(&'a [FunctionTable]),
}

/// Per-form tables, plus the residue view when every table is field-valued.
struct Resolved<'a> {
    complex: Vec<std::borrow::Cow<'a, [Complex64]>>,
    residues: Option<(Vec<&'a [u8]>, Vec<u8>)>,
    space: Space,
}

fn resolve<'a>(sys: &LinearSystem, payload: Payload<'a>) -> Result<Resolved<'a>> {
    use std::borrow::Cow;
    let m = sys.m();
    let field = sys.field();
    let check_field = |t: &FunctionTable| -> Result<()> {
        if t.p() != sys.p() {
            return invalid(format!("table over F_{} used with a system over F_{}", t.p(), sys.p()));
        }
        Ok(())
    };
    let check_len = |len: usize| -> Result<()> {
        if len != m {
            return Err(Error::DimensionMismatch { expected: m, got: len });
        }
        Ok(())
    };
    match payload {
        Payload::Plain(f) => {
            check_field(f)?;
            Ok(Resolved {
                complex: vec![Cow::Borrowed(f.values()); m],
                residues: f.residues().map(|r| (vec![r; m], vec![1; m])),
                space: *f.space(),
            })
        }
        Payload::Conjugated(f, alpha) => {
            check_field(f)?;
            check_len(alpha.len())?;
            let conj: Vec<Complex64> = f.values().iter().map(|z| z.conj()).collect();
            let conj = Cow::<[Complex64]>::Owned(conj);
            Ok(Resolved {
                complex: alpha.iter().map(|&a| if a { conj.clone() } else { Cow::Borrowed(f.values()) }).collect(),
                residues: f.residues().map(|r| (vec![r; m], alpha.iter().map(|&a| if a { field.neg(1) } else { 1 }).collect())),
                space: *f.space(),
            })
        }
        Payload::Coefficients(f, beta) => {
            check_field(f)?;
            check_len(beta.len())?;
            let Some(r) = f.residues() else {
                return invalid("coefficient averages need a field-valued table");
            };
            if let Some(b) = beta.iter().find(|&&b| b as u32 >= sys.p()) {
                return invalid(format!("coefficient {b} is not a residue mod {}", sys.p()));
            }
            let roots = field.roots();
            let complex = beta.iter().map(|&b| Cow::Owned(r.iter().map(|&v| roots[field.mul(b, v) as usize]).collect())).collect();
            Ok(Resolved { complex, residues: Some((vec![r; m], beta.to_vec())), space: *f.space() })
        }
        Payload::PerForm(fs) => {
            check_len(fs.len())?;
            for t in fs {
                check_field(t)?;
                t.same_shape(&fs[0])?;
            }
            let residues: Option<Vec<&[u8]>> = fs.iter().map(|t| t.residues()).collect();
            Ok(Resolved {
                complex: fs.iter().map(|t| Cow::Borrowed(t.values())).collect(),
                residues: residues.map(|r| (r, vec![1; m])),
                space: *fs[0].space(),
            })
        }
    }
}

/// Exact or Monte Carlo average of the payload over the system. Field-valued
/// payloads are averaged by exact residue counting in exact mode.
pub fn linear_form_average(sys: &LinearSystem, payload: Payload<'_>, mode: Mode) -> Result<Estimate<Complex64>> {
    mode.validate()?;
    let r = resolve(sys, payload)?;
    let tables: Vec<&[Complex64]> = r.complex.iter().map(|c| c.as_ref()).collect();
    match mode {
        Mode::Exact => {
            let value = match &r.residues {
                Some((res, beta)) => residue_average(&r.space, sys.k(), sys.forms(), res, beta)?,
                None => product_average(&r.space, sys.k(), sys.forms(), &tables)?,
            };
            Ok(Estimate::exact(value))
        }
        Mode::MonteCarlo { samples, seed } => Ok(mc_product_average(&r.space, sys.forms(), &tables, samples, seed)),
    }
}

/// t_L(f), exact.
pub fn t_l(sys: &LinearSystem, f: &FunctionTable) -> Result<Complex64> {
    Ok(linear_form_average(sys, Payload::Plain(f), Mode::Exact)?.value)
}

/// f^{L^M}(x) = E[∏_{L ∈ L} f(L(X)) | M(X) = x].
pub fn flagged_average(f: &FunctionTable, fs: &FlaggedSystem) -> Result<FunctionTable> {
    let sys = fs.system();
    if f.p() != sys.p() {
        return invalid("field mismatch between table and system");
    }
    let tables = vec![f.values(); sys.m()];
    let values = conditional_average(f.space(), sys.k(), sys.forms(), &tables, fs.flag())?;
    Ok(derived(*f.space(), values))
}

/// f^{∂L} = Σ_{L ∈ L} f^{(L \ {L})^L}. Each removed form is used as the
/// conditioning form even when it lies outside the span of the rest; an empty
/// remainder contributes the constant 1.
pub fn boundary_function(f: &FunctionTable, sys: &LinearSystem) -> Result<FunctionTable> {
    if f.p() != sys.p() {
        return invalid("field mismatch between table and system");
    }
    if let Some(i) = (0..sys.m()).find(|&i| sys.form(i).iter().all(|&c| c == 0)) {
        return invalid(format!("form {i} is zero"));
    }
    let mut total = vec![Complex64::new(0.0, 0.0); f.len()];
    for i in 0..sys.m() {
        let rest: Vec<Vec<u8>> = (0..sys.m()).filter(|&j| j != i).map(|j| sys.form(j).to_vec()).collect();
        let tables = vec![f.values(); rest.len()];
        let part = conditional_average(f.space(), sys.k(), &rest, &tables, sys.form(i))?;
        for (t, v) in total.iter_mut().zip(part) {
            *t += v;
        }
    }
    Ok(derived(*f.space(), total))
}

/// `index,re,im` rows of a table.
pub fn table_to_csv(t: &FunctionTable) -> String {
    let mut out = String::from("index,re,im\n");
    for (i, z) in t.values().iter().enumerate() {
        out.push_str(&format!("{i},{},{}\n", z.re, z.im));
    }
    out
}
