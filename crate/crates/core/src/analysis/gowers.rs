//! Gowers uniformity norms.
//!
//! ‖f‖_{U^k}^{2^k} = E_{X,Y} ∏_{S⊆[k]} C^{k−|S|} f(X + Σ_{i∈S} Y_i).
//! Exact mode takes k − 2 multiplicative derivatives Δ_h f(x) = f(x+h)·conj f(x)
//! and finishes with ‖g‖_{U^2}^4 = Σ_α |ĝ(α)|^4, so it enumerates p^{n(k−1)}
//! points instead of p^{n(k+1)}.

use num_complex::Complex64;

use super::averages::{product_average, MC_CHUNK};
use super::fourier::dft_in_place;
use super::table::FunctionTable;
use crate::error::{invalid, Error, Result};
use crate::estimate::{ComplexMoments, Estimate, Mode};
use crate::field::{check_budget, pow_u128, substream, Space};
use crate::linear_forms::catalogue;
use crate::par::{self, CompensatedSum};

/// Slack on the non-negativity of ‖f‖_{U^k}^{2^k} before taking the root.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-12;

/// Δ_h f(x) = f(x + h)·conj(f(x)).
pub fn multiplicative_derivative(space: &Space, values: &[Complex64], h: usize) -> Vec<Complex64> {
    (0..values.len()).map(|x| values[space.add(x, h)] * values[x].conj()).collect()
}

fn u2_fourth_power(space: &Space, mut g: Vec<Complex64>) -> f64 {
    dft_in_place(space, &mut g, -1);
    let scale = 1.0 / g.len() as f64;
    let mut acc = CompensatedSum::new();
    for z in &g {
        let a = z.norm_sqr() * scale * scale;
        acc.add(a * a);
    }
    acc.value()
}

fn exact_power(f: &FunctionTable, k: usize) -> Result<f64> {
    let space = *f.space();
    let values = f.values();
    match k {
        0 => invalid("k must be at least 1"),
        1 => Ok(f.mean().norm_sqr()),
        2 => Ok(u2_fourth_power(&space, values.to_vec())),
        _ => {
            check_budget(pow_u128(space.size() as u64, k - 1))?;
            let outer = space.size().pow((k - 2) as u32);
            let parts = par::map_indexed(outer, |t| {
                let mut g = values.to_vec();
                let mut rest = t;
                for _ in 0..k - 2 {
                    g = multiplicative_derivative(&space, &g, rest % space.size());
                    rest /= space.size();
                }
                u2_fourth_power(&space, g)
            });
            let mut acc = CompensatedSum::new();
            for v in parts {
                acc.add(v);
            }
            Ok(acc.value() / outer as f64)
        }
    }
}

fn mc_power(f: &FunctionTable, k: usize, samples: u64, seed: u64) -> Estimate<f64> {
    let space = *f.space();
    let values = f.values();
    let chunks = samples.div_ceil(MC_CHUNK) as usize;
    let parts = par::map_indexed(chunks, |c| {
        let mut rng = substream(seed, c as u64);
        let count = MC_CHUNK.min(samples - c as u64 * MC_CHUNK);
        let mut mom = ComplexMoments::default();
        let mut pts = vec![0usize; 1 << k];
        let mut ys = vec![0usize; k];
        for _ in 0..count {
            pts[0] = space.random_point(&mut rng);
            for y in ys.iter_mut() {
                *y = space.random_point(&mut rng);
            }
            let mut prod = Complex64::new(1.0, 0.0);
            for s in 0..1usize << k {
                if s > 0 {
                    let low = s.trailing_zeros() as usize;
                    pts[s] = space.add(pts[s & (s - 1)], ys[low]);
                }
                let v = values[pts[s]];
                prod *= if (k - s.count_ones() as usize) % 2 == 1 { v.conj() } else { v };
            }
            mom.push(prod);
        }
        mom
    });
    let mut total = ComplexMoments::default();
    for part in &parts {
        total.merge(part);
    }
    Estimate { value: total.mean().re, std_error: Some(total.std_error()), mode: Mode::mc(samples, seed) }
}

/// ‖f‖_{U^k}^{2^k}. In exact mode the budget is p^{n(k−1)} for k ≥ 3.
pub fn gowers_norm_power(f: &FunctionTable, k: usize, mode: Mode) -> Result<Estimate<f64>> {
    mode.validate()?;
    if k == 0 {
        return invalid("k must be at least 1");
    }
    match mode {
        Mode::Exact => Ok(Estimate::exact(exact_power(f, k)?)),
        Mode::MonteCarlo { samples, seed } => Ok(mc_power(f, k, samples, seed)),
    }
}

/// ‖f‖_{U^k}. Exact mode fails hard if the 2^k-th power is negative beyond
/// [`NEGATIVITY_TOLERANCE`]. Monte Carlo estimates are clamped at zero before
/// the root; their standard error is carried through the root by the delta
/// method (or bounded by se^{1/2^k} when the estimate is near zero).
pub fn gowers_norm(f: &FunctionTable, k: usize, mode: Mode) -> Result<Estimate<f64>> {
    let power = gowers_norm_power(f, k, mode)?;
    let root = 1.0 / (1u64 << k) as f64;
    if power.mode.is_exact() {
        if power.value < -NEGATIVITY_TOLERANCE {
            return Err(Error::Internal(format!("‖f‖_U^{k} power is negative: {}", power.value)));
        }
        return Ok(Estimate::exact(power.value.max(0.0).powf(root)));
    }
    let value = power.value.max(0.0).powf(root);
    let se = power.std_error.unwrap_or(0.0);
    let std_error = if value > 0.0 && se < power.value {
        se * root * value / power.value
    } else {
        se.powf(root)
    };
    Ok(Estimate { value, std_error: Some(std_error), mode: power.mode })
}

/// ⟨(f_S)_S⟩_{U^k} = E ∏_S C^{k−|S|} f_S(X + Σ_{i∈S} Y_i) by direct
/// enumeration over (X, Y_1..Y_k). `family[s]` is f_S where bit k−i of s
/// (counting from 1 at the least significant end) marks i ∈ S.
pub fn gowers_inner_product(family: &[FunctionTable], k: usize) -> Result<Complex64> {
    if family.len() != 1 << k {
        return Err(Error::DimensionMismatch { expected: 1 << k, got: family.len() });
    }
    for t in family {
        t.same_shape(&family[0])?;
    }
    let space = *family[0].space();
    let cube = catalogue::cube(space.p(), k)?;
    let conj: Vec<Vec<Complex64>> = family.iter().map(|t| t.values().iter().map(|z| z.conj()).collect()).collect();
    let tables: Vec<&[Complex64]> = (0..1usize << k)
        .map(|s| if (k - s.count_ones() as usize) % 2 == 1 { conj[s].as_slice() } else { family[s].values() })
        .collect();
    product_average(&space, k + 1, cube.forms(), &tables)
}

/// ‖f‖_{U^k} straight from the definition; budget p^{n(k+1)}.
pub fn gowers_norm_direct(f: &FunctionTable, k: usize) -> Result<f64> {
    let v = gowers_inner_product(&vec![f.clone(); 1 << k], k)?;
    if v.re < -NEGATIVITY_TOLERANCE {
        return Err(Error::Internal(format!("‖f‖_U^{k} power is negative: {}", v.re)));
    }
    Ok(v.re.max(0.0).powf(1.0 / (1u64 << k) as f64))
}
