//! Distributional functions Γ: F_p^n → P(F_p), their lift from [0,1]-valued
//! functions, a_c∘Γ, sampling F ∼ Γ and t*_{L,β}(Γ).

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::analysis::{derived, linear_form_average, FunctionTable, Payload};
use crate::error::{invalid, Error, Result};
use crate::estimate::{Estimate, Mode};
use crate::field::{substream, PrimeField, Space};
use crate::linear_forms::LinearSystem;
use crate::par;

/// Slack on Σ_z Γ(x)(z) = 1.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionalFunction {
    space: Space,
    /// Row x holds Pr[Γ(x) = z] for z = 0..p−1.
    probs: Vec<f64>,
}

impl DistributionalFunction {
    /// `rows[x]` is the distribution at the x-th point.
    pub fn new(field: PrimeField, n: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        let space = Space::new(field, n)?;
        let p = field.p() as usize;
        if rows.len() != space.size() {
            return Err(Error::DimensionMismatch { expected: space.size(), got: rows.len() });
        }
        let mut probs = Vec::with_capacity(space.size() * p);
        for (x, row) in rows.into_iter().enumerate() {
            if row.len() != p {
                return invalid(format!("point {x}: expected {p} probabilities, got {}", row.len()));
            }
            if row.iter().any(|&v| v.is_nan() || v < 0.0) {
                return invalid(format!("point {x}: negative or NaN probability"));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
                return invalid(format!("point {x}: probabilities sum to {total}"));
            }
            probs.extend(row);
        }
        Ok(Self { space, probs })
    }

    /// The Dirac embedding of a field-valued table.
    pub fn dirac(f: &FunctionTable) -> Result<Self> {
        let Some(res) = f.residues() else {
            return invalid("Dirac embedding needs a field-valued table");
        };
        let p = f.p() as usize;
        let mut probs = vec![0.0; res.len() * p];
        for (x, &v) in res.iter().enumerate() {
            probs[x * p + v as usize] = 1.0;
        }
        Ok(Self { space: *f.space(), probs })
    }

    pub fn uniform(field: PrimeField, n: usize) -> Result<Self> {
        let space = Space::new(field, n)?;
        let p = field.p() as usize;
        Ok(Self { space, probs: vec![1.0 / p as f64; space.size() * p] })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn distribution(&self, x: usize) -> &[f64] {
        let p = self.space.p() as usize;
        &self.probs[x * p..(x + 1) * p]
    }
}

/// Γ_F with Pr[Γ_F(x) = 0] = F(x) + (1 − F(x))/p and Pr[Γ_F(x) = z] =
/// (1 − F(x))/p otherwise, so that a_c∘Γ_F = F for every c ≠ 0.
pub fn distributional_lift(f: &FunctionTable) -> Result<DistributionalFunction> {
    let p = f.p() as usize;
    let mut probs = Vec::with_capacity(f.len() * p);
    for (x, z) in f.values().iter().enumerate() {
        if f.residues().is_some() || z.im != 0.0 || !(0.0..=1.0).contains(&z.re) {
            return invalid(format!("F must be real-valued in [0, 1]; entry {x} is {z}"));
        }
        let rest = (1.0 - z.re) / p as f64;
        probs.push(z.re + rest);
        probs.extend(std::iter::repeat_n(rest, p - 1));
    }
    Ok(DistributionalFunction { space: *f.space(), probs })
}

/// (a_c∘Γ)(x) = E_{z∼Γ(x)} e_p(c z).
pub fn a_c_compose(gamma: &DistributionalFunction, c: u8) -> Result<FunctionTable> {
    let field = gamma.space.field;
    if c as u32 >= field.p() {
        return invalid(format!("{c} is not a residue mod {}", field.p()));
    }
    let roots = field.roots();
    let values = (0..gamma.space.size())
        .map(|x| {
            gamma.distribution(x).iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (z, &pr)| acc + roots[field.mul(c, z as u8) as usize] * pr)
        })
        .collect();
    Ok(derived(gamma.space, values))
}

/// F ∼ Γ: each value drawn independently from Γ(x).
pub fn sample_function(gamma: &DistributionalFunction, seed: u64) -> Result<FunctionTable> {
    let p = gamma.space.p() as usize;
    let mut rng = crate::field::rng_from_seed(seed);
    let residues = (0..gamma.space.size())
        .map(|x| {
            let u: f64 = rng.random();
            let row = gamma.distribution(x);
            let mut acc = 0.0;
            for (z, &pr) in row.iter().enumerate() {
                acc += pr;
                if u < acc {
                    return z as u8;
                }
            }
            // Rounding left u above the cumulative sum: take the last value
            // with positive mass.
            (0..p).rev().find(|&z| row[z] > 0.0).unwrap_or(0) as u8
        })
        .collect();
    FunctionTable::from_field(gamma.space.field, gamma.space.n, residues)
}

/// t*_{L,β}(Γ) = E ∏_i (a_{β(i)}∘Γ)(L_i(X)).
pub fn t_star(gamma: &DistributionalFunction, sys: &LinearSystem, beta: &[u8], mode: Mode) -> Result<Estimate<Complex64>> {
    if beta.len() != sys.m() {
        return Err(Error::DimensionMismatch { expected: sys.m(), got: beta.len() });
    }
    let tables = beta.iter().map(|&b| a_c_compose(gamma, b)).collect::<Result<Vec<_>>>()?;
    linear_form_average(sys, Payload::PerForm(&tables), mode)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub t_gamma: [f64; 2],
    pub seeds: u64,
    pub failures: u64,
    pub failure_rate: f64,
    pub max_deviation: f64,
    pub threshold: f64,
}

/// Samples F ∼ Γ for seeds 0..seeds (substreams of `seed`) and counts how
/// often |t*_{L,β}(F) − t*_{L,β}(Γ)| exceeds `threshold`. All averages exact.
pub fn concentration_experiment(
    gamma: &DistributionalFunction,
    sys: &LinearSystem,
    beta: &[u8],
    seeds: u64,
    seed: u64,
    threshold: f64,
) -> Result<ConcentrationReport> {
    let target = t_star(gamma, sys, beta, Mode::Exact)?.value;
    let devs = par::map_indexed(seeds as usize, |i| -> Result<f64> {
        let s: u64 = substream(seed, i as u64).random();
        let f = sample_function(gamma, s)?;
        Ok((linear_form_average(sys, Payload::Coefficients(&f, beta), Mode::Exact)?.value - target).norm())
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let failures = devs.iter().filter(|&&d| d > threshold).count() as u64;
    Ok(ConcentrationReport {
        t_gamma: [target.re, target.im],
        seeds,
        failures,
        failure_rate: failures as f64 / seeds.max(1) as f64,
        max_deviation: devs.iter().cloned().fold(0.0, f64::max),
        threshold,
    })
}
