//! Polynomial factors: the partition of F_p^n into common level sets of
//! P_1..P_C, conditional expectations on it, and the energy-increment
//! decomposition f = E(f|B) + (f − E(f|B)).

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{correlation_with_family, derived, dft_in_place, gowers_norm, FunctionTable, PolyFamily};
use crate::error::{invalid, Error, Result};
use crate::estimate::Mode;
use crate::field::{check_budget, pow_u128, PrimeField, Space};
use crate::par::{self, ComplexSum};
use crate::polynomials::{rank_of_set, Polynomial, PolynomialJson};

/// Two values on one atom closer than this count as equal.
pub const MEASURABILITY_TOLERANCE: f64 = 1e-12;

/// Default round cap of [`decompose`].
pub const DEFAULT_MAX_ROUNDS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialFactor {
    space: Space,
    polys: Vec<Polynomial>,
    /// Dense atom id of every point, in order of first appearance.
    atom_of: Vec<u32>,
    /// Label (P_1(x), .., P_C(x)) of each atom id.
    labels: Vec<Vec<u8>>,
}

impl PolynomialFactor {
    pub fn new(field: PrimeField, n: usize, polys: Vec<Polynomial>) -> Result<Self> {
        let space = Space::new(field, n)?;
        for (i, q) in polys.iter().enumerate() {
            if q.p() != field.p() || q.num_vars() != n {
                return invalid(format!("polynomial {i} is not over F_{}^{n}", field.p()));
            }
        }
        let tables = polys.iter().map(|q| q.to_table()).collect::<Result<Vec<_>>>()?;
        let mut ids: HashMap<Vec<u8>, u32> = HashMap::new();
        let mut labels = Vec::new();
        let mut atom_of = Vec::with_capacity(space.size());
        for x in 0..space.size() {
            let label: Vec<u8> = tables.iter().map(|t| t[x]).collect();
            let id = *ids.entry(label.clone()).or_insert_with(|| {
                labels.push(label);
                (labels.len() - 1) as u32
            });
            atom_of.push(id);
        }
        Ok(Self { space, polys, atom_of, labels })
    }

    /// The trivial factor with a single atom.
    pub fn trivial(field: PrimeField, n: usize) -> Result<Self> {
        Self::new(field, n, Vec::new())
    }

    pub fn with(&self, q: Polynomial) -> Result<Self> {
        let mut polys = self.polys.clone();
        polys.push(q);
        Self::new(self.space.field, self.space.n, polys)
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn polynomials(&self) -> &[Polynomial] {
        &self.polys
    }

    /// C, the number of defining polynomials.
    pub fn complexity(&self) -> usize {
        self.polys.len()
    }

    /// Maximum degree of the defining polynomials (0 for the trivial factor).
    pub fn degree(&self) -> i32 {
        self.polys.iter().map(|q| q.degree()).max().unwrap_or(0).max(0)
    }

    /// Number of nonempty atoms; at most p^C.
    pub fn atom_count(&self) -> usize {
        self.labels.len()
    }

    pub fn atom_id(&self, x: usize) -> usize {
        self.atom_of[x] as usize
    }

    pub fn atom_label(&self, x: usize) -> &[u8] {
        &self.labels[self.atom_of[x] as usize]
    }

    pub fn labels(&self) -> &[Vec<u8>] {
        &self.labels
    }

    pub fn atom_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.labels.len()];
        for &a in &self.atom_of {
            sizes[a as usize] += 1;
        }
        sizes
    }

    /// Whether `g` is constant on every atom.
    pub fn is_measurable(&self, g: &FunctionTable) -> bool {
        self.atom_values(g).is_ok()
    }

    /// Γ with g = Γ∘(P_1..P_C), indexed by atom id.
    pub fn atom_values(&self, g: &FunctionTable) -> Result<Vec<Complex64>> {
        self.check(g)?;
        let mut seen: Vec<Option<Complex64>> = vec![None; self.labels.len()];
        for (x, &v) in g.values().iter().enumerate() {
            let a = self.atom_of[x] as usize;
            match seen[a] {
                None => seen[a] = Some(v),
                Some(w) if (w - v).norm() > MEASURABILITY_TOLERANCE => {
                    return Err(Error::NotMeasurable(format!("atom {:?} takes values {w} and {v}", self.labels[a])));
                }
                _ => {}
            }
        }
        Ok(seen.into_iter().map(|v| v.unwrap_or_default()).collect())
    }

    fn check(&self, g: &FunctionTable) -> Result<()> {
        if g.p() != self.space.p() || g.n() != self.space.n {
            return invalid("table and factor live on different spaces");
        }
        Ok(())
    }

    pub fn to_json(&self) -> FactorJson {
        FactorJson { p: self.space.p(), n: self.space.n, polynomials: self.polys.iter().map(PolynomialJson::from).collect() }
    }

    pub fn from_json(json: &FactorJson) -> Result<Self> {
        let polys = json.polynomials.iter().cloned().map(Polynomial::try_from).collect::<Result<Vec<_>>>()?;
        Self::new(PrimeField::new(json.p)?, json.n, polys)
    }
}

/// `{p, n, polynomials: [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorJson {
    pub p: u32,
    pub n: usize,
    pub polynomials: Vec<PolynomialJson>,
}

/// E(f|B)(x): the mean of f over the atom of x.
pub fn conditional_expectation(f: &FunctionTable, b: &PolynomialFactor) -> Result<FunctionTable> {
    b.check(f)?;
    let atoms = b.atom_count();
    let mut sums = vec![ComplexSum::new(); atoms];
    for (x, &v) in f.values().iter().enumerate() {
        sums[b.atom_of[x] as usize].add(v);
    }
    let sizes = b.atom_sizes();
    let means: Vec<Complex64> = sums.iter().zip(&sizes).map(|(s, &c)| s.value() / c as f64).collect();
    let values = par::map_indexed(f.len(), |x| means[b.atom_of[x] as usize]);
    Ok(derived(*f.space(), values))
}

/// F̂(γ) for γ ∈ F_p^C (base-p index, γ_1 most significant) such that
/// h = Σ_γ F̂(γ) e_p(Σ_i γ_i P_i). Labels not realized by any point are given
/// the value 0.
pub fn factor_fourier(h: &FunctionTable, b: &PolynomialFactor) -> Result<Vec<Complex64>> {
    let gamma = b.atom_values(h)?;
    let c = b.complexity();
    check_budget(pow_u128(b.space.p() as u64, c))?;
    let label_space = Space::new(b.space.field, c)?;
    let mut data = vec![Complex64::new(0.0, 0.0); label_space.size()];
    for (label, v) in b.labels.iter().zip(gamma) {
        data[label_space.index_of(label)] = v;
    }
    dft_in_place(&label_space, &mut data, -1);
    let scale = 1.0 / label_space.size() as f64;
    Ok(data.into_iter().map(|z| z * scale).collect())
}

/// Σ_γ coeffs[γ] e_p(Σ_i γ_i P_i(x)).
pub fn factor_fourier_reconstruct(coeffs: &[Complex64], b: &PolynomialFactor) -> Result<FunctionTable> {
    let c = b.complexity();
    let label_space = Space::new(b.space.field, c)?;
    if coeffs.len() != label_space.size() {
        return Err(Error::DimensionMismatch { expected: label_space.size(), got: coeffs.len() });
    }
    let mut gamma = coeffs.to_vec();
    dft_in_place(&label_space, &mut gamma, 1);
    let by_atom: Vec<Complex64> = b.labels.iter().map(|l| gamma[label_space.index_of(l)]).collect();
    let values = (0..b.space.size()).map(|x| by_atom[b.atom_of[x] as usize]).collect();
    Ok(derived(b.space, values))
}

/// E(Γ|B → B′): rewrites g = Γ∘(P_1..P_C) as Γ∘(Q_1..Q_C).
pub fn hybrid_substitute(g: &FunctionTable, b: &PolynomialFactor, b2: &PolynomialFactor) -> Result<FunctionTable> {
    if b.complexity() != b2.complexity() {
        return Err(Error::DimensionMismatch { expected: b.complexity(), got: b2.complexity() });
    }
    for (i, (p, q)) in b.polys.iter().zip(&b2.polys).enumerate() {
        if p.degree() != q.degree() {
            return invalid(format!("degree mismatch at index {i}: {} vs {}", p.degree(), q.degree()));
        }
    }
    b2.check(g)?;
    let gamma = b.atom_values(g)?;
    let lookup: HashMap<&[u8], Complex64> = b.labels.iter().map(|l| l.as_slice()).zip(gamma).collect();
    let mut values = Vec::with_capacity(g.len());
    for x in 0..b2.space.size() {
        let label = b2.atom_label(x);
        match lookup.get(label) {
            Some(&v) => values.push(v),
            None => return Err(Error::Hypothesis(format!("label {label:?} is an atom of B′ but empty in B, so Γ is undefined there"))),
        }
    }
    Ok(derived(b2.space, values))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposeOptions {
    /// Restrict added polynomials to homogeneous ones of degree exactly d.
    pub homogeneous: bool,
    pub max_rounds: usize,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self { homogeneous: false, max_rounds: DEFAULT_MAX_ROUNDS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub rounds: usize,
    /// ‖f − E(f|B)‖_{U^{d+1}} at exit.
    pub achieved_norm: f64,
    pub complexity: usize,
    /// Set when the target was missed (round cap hit, or no polynomial phase
    /// correlates with the residual).
    pub flagged: bool,
    /// Residual norm before each round and at exit.
    pub norm_history: Vec<f64>,
    /// ‖E(f|B)‖_2^2 before each round and at exit.
    pub energy_history: Vec<f64>,
    /// r(C) for the final C, when a rank floor was supplied.
    pub rank_floor: Option<usize>,
    /// Whether rank(B) > r(C) was verified; `None` when undecided.
    pub rank_floor_met: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub factor: PolynomialFactor,
    /// h = E(f|B).
    pub structured: FunctionTable,
    /// h′ = f − E(f|B).
    pub residual: FunctionTable,
    pub report: DecompositionReport,
}

/// Energy increment: while ‖f − E(f|B)‖_{U^{d+1}} > δ, add the polynomial
/// of degree ≤ d that correlates best with the residual. `rank_floor` is
/// evaluated on the final factor and reported, never enforced.
pub fn decompose(
    f: &FunctionTable,
    d: u32,
    delta: f64,
    rank_floor: Option<&dyn Fn(usize) -> usize>,
    options: DecomposeOptions,
) -> Result<Decomposition> {
    if delta.is_nan() || delta < 0.0 {
        return invalid("delta must be non-negative");
    }
    if d == 0 {
        return invalid("degree must be at least 1");
    }
    let field = f.field();
    let n = f.n();
    let family = PolyFamily { degree: d, homogeneous: options.homogeneous };
    let mut factor = PolynomialFactor::trivial(field, n)?;
    let mut norm_history = Vec::new();
    let mut energy_history = Vec::new();
    let mut rounds = 0;
    let mut flagged = false;
    loop {
        let structured = conditional_expectation(f, &factor)?;
        let residual = f.add_scaled(-1.0, &structured)?;
        let norm = gowers_norm(&residual, d as usize + 1, Mode::Exact)?.value;
        norm_history.push(norm);
        energy_history.push(structured.l2_squared());
        if norm <= delta {
            break;
        }
        if rounds == options.max_rounds {
            flagged = true;
            break;
        }
        let best = correlation_with_family(&residual, family)?;
        let q = best.witness.expect("polynomial family yields a witness");
        if best.value <= MEASURABILITY_TOLERANCE || q.degree() <= 0 {
            flagged = true;
            break;
        }
        factor = factor.with(q)?;
        rounds += 1;
    }
    let structured = conditional_expectation(f, &factor)?;
    let residual = f.add_scaled(-1.0, &structured)?;
    let c = factor.complexity();
    let floor = rank_floor.map(|r| r(c));
    let rank_floor_met = match floor {
        Some(r) if c > 0 => rank_of_set(factor.polynomials(), r).ok().and_then(|rep| {
            if rep.exceeds_verified(r) {
                Some(true)
            } else if rep.at_most.is_some_and(|a| a <= r) {
                Some(false)
            } else {
                None
            }
        }),
        _ => None,
    };
    let report = DecompositionReport {
        rounds,
        achieved_norm: *norm_history.last().unwrap_or(&0.0),
        complexity: c,
        flagged,
        norm_history,
        energy_history,
        rank_floor: floor,
        rank_floor_met,
    };
    Ok(Decomposition { factor, structured, residual, report })
}
