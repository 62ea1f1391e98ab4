//! Query testers: the U^{d+1} uniformity test, generic (μ, Γ, θ) testers with
//! affine symmetrization and linear-form profiles, dual families,
//! distributional functions and the interior experiment.

mod distributional;
mod dual;
mod interior;

pub use distributional::{a_c_compose, concentration_experiment, distributional_lift, sample_function, t_star, ConcentrationReport, DistributionalFunction};
pub use dual::{find_testing_degree, DualFamily, DualGenerator, TestingDegreeReport};
pub use interior::{interior_experiment, HypothesisGate, InteriorReport};

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{linear_form_average, FormWalker, FunctionTable, Payload, MC_CHUNK};
use crate::error::{invalid, Error, Result};
use crate::estimate::{ComplexMoments, Estimate, Mode};
use crate::field::{check_budget, pow_u128, random_affine_with, substream, PrimeField, Space};
use crate::linalg;
use crate::linear_forms::{catalogue, LinearSystem};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformityResult {
    /// Estimate of ‖e_p(f)‖_{U^{d+1}}^{2^{d+1}} (real part of the sample mean).
    pub estimate: Estimate<f64>,
    /// Imaginary part of the sample mean; zero in expectation.
    pub imaginary: f64,
    pub threshold: f64,
    pub accept: bool,
    pub samples: u64,
    /// Table entries read, counted at every access.
    pub queries: u64,
}

/// Averages e_p(Σ_{I⊆[d+1]} (−1)^{d+1−|I|} f(X + Σ_{i∈I} Y_i)) over sampled
/// (X, Y). Every sample reads exactly 2^{d+1} entries of f.
pub fn uniformity_test(f: &FunctionTable, d: u32, samples: u64, seed: u64, threshold: f64) -> Result<UniformityResult> {
    let Some(res) = f.residues() else {
        return invalid("the uniformity test reads a field-valued table");
    };
    if samples == 0 {
        return invalid("samples must be >= 1");
    }
    let k = d as usize + 1;
    if k > 20 {
        return invalid("degree too large");
    }
    let space = *f.space();
    let field = space.field;
    let roots = field.roots();
    let chunks = samples.div_ceil(MC_CHUNK) as usize;
    let parts = par::map_indexed(chunks, |c| {
        let mut rng = substream(seed, c as u64);
        let count = MC_CHUNK.min(samples - c as u64 * MC_CHUNK);
        let mut mom = ComplexMoments::default();
        let mut queries = 0u64;
        let mut pts = vec![0usize; 1 << k];
        let mut ys = vec![0usize; k];
        for _ in 0..count {
            pts[0] = space.random_point(&mut rng);
            for y in ys.iter_mut() {
                *y = space.random_point(&mut rng);
            }
            let mut s = 0u8;
            for set in 0..1usize << k {
                if set > 0 {
                    pts[set] = space.add(pts[set & (set - 1)], ys[set.trailing_zeros() as usize]);
                }
                let v = res[pts[set]];
                queries += 1;
                s = if (k - set.count_ones() as usize) % 2 == 1 { field.sub(s, v) } else { field.add(s, v) };
            }
            mom.push(roots[s as usize]);
        }
        (mom, queries)
    });
    let mut total = ComplexMoments::default();
    let mut queries = 0;
    for (m, q) in &parts {
        total.merge(m);
        queries += q;
    }
    let mean = total.mean();
    let estimate = Estimate { value: mean.re, std_error: Some(total.std_error()), mode: Mode::mc(samples, seed) };
    Ok(UniformityResult { estimate, imaginary: mean.im, threshold, accept: mean.re >= threshold, samples, queries })
}

/// One point of an explicit query distribution: q points of F_p^n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportPoint {
    pub points: Vec<Vec<u8>>,
    pub prob: f64,
}

/// Draws point indices for a black-box sampler.
pub type SamplerFn = Arc<dyn Fn(&Space, &mut ChaCha8Rng) -> Vec<usize> + Send + Sync>;

#[derive(Clone)]
pub enum QuerySampler {
    /// Queries L_1(X), .., L_q(X) for X uniform in (F_p^n)^k; works for every n.
    LinearPattern(LinearSystem),
    /// A finite distribution over q-tuples of points of F_p^n for one n.
    ExplicitSupport { n: usize, support: Vec<SupportPoint> },
    /// Opaque sampler; profiles cannot be extracted from it.
    BlackBox { q: usize, sampler: SamplerFn },
}

impl fmt::Debug for QuerySampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuerySampler::LinearPattern(sys) => f.debug_tuple("LinearPattern").field(sys).finish(),
            QuerySampler::ExplicitSupport { n, support } => f.debug_struct("ExplicitSupport").field("n", n).field("support", support).finish(),
            QuerySampler::BlackBox { q, .. } => f.debug_struct("BlackBox").field("q", q).finish_non_exhaustive(),
        }
    }
}

/// μ, Γ, θ⁻ < θ⁺, ε > δ of a correlation tester. `decision` lists Γ(z) ∈ {0,1}
/// for z ∈ F_p^q in base-p order with the first query most significant.
#[derive(Debug, Clone)]
pub struct TesterSpec {
    field: PrimeField,
    q: usize,
    sampler: QuerySampler,
    decision: Vec<u8>,
    pub theta_minus: f64,
    pub theta_plus: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Number of independent random affine maps applied to every query tuple.
    symmetrizations: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TesterRun {
    pub acceptance: Estimate<f64>,
    /// Accept above θ⁺, reject below θ⁻.
    pub verdict: Verdict,
}

impl TesterSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        field: PrimeField,
        sampler: QuerySampler,
        decision: Vec<u8>,
        theta_minus: f64,
        theta_plus: f64,
        epsilon: f64,
        delta: f64,
    ) -> Result<Self> {
        let q = match &sampler {
            QuerySampler::LinearPattern(sys) => {
                if sys.p() != field.p() {
                    return invalid("sampler and tester use different fields");
                }
                sys.m()
            }
            QuerySampler::ExplicitSupport { n, support } => {
                let Some(first) = support.first() else {
                    return invalid("empty support");
                };
                let q = first.points.len();
                let mut total = 0.0;
                for (i, s) in support.iter().enumerate() {
                    if s.points.len() != q {
                        return invalid(format!("support point {i} has {} queries, expected {q}", s.points.len()));
                    }
                    if s.prob.is_nan() || s.prob < 0.0 {
                        return invalid(format!("support point {i} has a negative probability"));
                    }
                    for pt in &s.points {
                        if pt.len() != *n || pt.iter().any(|&c| c as u32 >= field.p()) {
                            return invalid(format!("support point {i} holds a point outside F_{}^{n}", field.p()));
                        }
                    }
                    total += s.prob;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return invalid(format!("support probabilities sum to {total}"));
                }
                q
            }
            QuerySampler::BlackBox { q, .. } => *q,
        };
        if q == 0 {
            return invalid("a tester makes at least one query");
        }
        let size = pow_u128(field.p() as u64, q);
        if size > 1 << 24 || decision.len() as u128 != size {
            return invalid(format!("decision table needs p^q = {size} entries, got {}", decision.len()));
        }
        if decision.iter().any(|&b| b > 1) {
            return invalid("decision values must be 0 or 1");
        }
        if !(0.0 <= theta_minus && theta_minus < theta_plus && theta_plus <= 1.0) {
            return invalid("need 0 <= theta_minus < theta_plus <= 1");
        }
        if !(0.0 < delta && delta < epsilon) {
            return invalid("need 0 < delta < epsilon");
        }
        Ok(Self { field, q, sampler, decision, theta_minus, theta_plus, epsilon, delta, symmetrizations: 0 })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    /// Number of queries.
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn sampler(&self) -> &QuerySampler {
        &self.sampler
    }

    pub fn decision(&self) -> &[u8] {
        &self.decision
    }

    pub fn symmetrizations(&self) -> u32 {
        self.symmetrizations
    }

    fn decide(&self, values: impl Iterator<Item = u8>) -> u8 {
        let p = self.field.p() as usize;
        self.decision[values.fold(0usize, |acc, v| acc * p + v as usize)]
    }

    fn verdict(&self, a: f64) -> Verdict {
        if a >= self.theta_plus {
            Verdict::Accept
        } else if a <= self.theta_minus {
            Verdict::Reject
        } else {
            Verdict::Inconclusive
        }
    }

    /// Γ̂(c) = E_z Γ(z) e_p(−c·z), so that Γ(z) = Σ_c Γ̂(c) e_p(c·z).
    pub fn decision_fourier(&self) -> Vec<Complex64> {
        let space = Space::new(self.field, self.q).expect("decision table fits the budget");
        let mut data: Vec<Complex64> = self.decision.iter().map(|&b| Complex64::new(b as f64, 0.0)).collect();
        crate::analysis::dft_in_place(&space, &mut data, -1);
        let scale = 1.0 / data.len() as f64;
        data.into_iter().map(|z| z * scale).collect()
    }
}

/// The U^{d+1} test as a generic tester: the queries f(X + Σ_{i∈I} Y_i) over
/// I ⊆ [d+1], accepted when Σ_I (−1)^{d+1−|I|} f(·) = 0. Its acceptance is
/// (1/p) Σ_{t ∈ F_p} ‖e_p(t f)‖_{U^{d+1}}^{2^{d+1}}; the thresholds
/// (1 + δ^{2^{d+1}})/p and (1 + ε^{2^{d+1}})/p are heuristic.
pub fn uniformity_tester_spec(p: u32, d: u32, epsilon: f64, delta: f64) -> Result<TesterSpec> {
    let k = d as usize + 1;
    let cube = catalogue::cube(p, k)?;
    let field = cube.field();
    let q = cube.m();
    let signs: Vec<u8> = (0..q).map(|s| if (k - (s as u32).count_ones() as usize) % 2 == 1 { field.neg(1) } else { 1 }).collect();
    let space = Space::new(field, q)?;
    let mut z = vec![0u8; q];
    let decision = (0..space.size())
        .map(|i| {
            space.digits_into(i, &mut z);
            let s = z.iter().zip(&signs).fold(0u8, |acc, (&v, &b)| field.add(acc, field.mul(b, v)));
            u8::from(s == 0)
        })
        .collect();
    let pow = (1u64 << k) as i32;
    let (lo, hi) = ((1.0 + delta.powi(pow)) / p as f64, (1.0 + epsilon.powi(pow)) / p as f64);
    TesterSpec::new(field, QuerySampler::LinearPattern(cube), decision, lo, hi, epsilon, delta)
}

/// Draws one query tuple (point indices) before symmetrization.
fn draw_queries(spec: &TesterSpec, space: &Space, rng: &mut ChaCha8Rng, out: &mut Vec<usize>) -> Result<()> {
    out.clear();
    match &spec.sampler {
        QuerySampler::LinearPattern(sys) => {
            let xs: Vec<usize> = (0..sys.k()).map(|_| space.random_point(rng)).collect();
            for form in sys.forms() {
                out.push(form.iter().zip(&xs).fold(0usize, |acc, (&l, &x)| space.combine(1, acc, l, x)));
            }
        }
        QuerySampler::ExplicitSupport { support, .. } => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = support.len() - 1;
            for (i, s) in support.iter().enumerate() {
                acc += s.prob;
                if u < acc {
                    chosen = i;
                    break;
                }
            }
            out.extend(support[chosen].points.iter().map(|pt| space.index_of(pt)));
        }
        QuerySampler::BlackBox { q, sampler } => {
            let pts = sampler(space, rng);
            if pts.len() != *q || pts.iter().any(|&x| x >= space.size()) {
                return invalid(format!("sampler emitted {} queries, expected {q} valid points", pts.len()));
            }
            out.extend(pts);
        }
    }
    Ok(())
}

fn check_table<'a>(spec: &TesterSpec, f: &'a FunctionTable) -> Result<&'a [u8]> {
    let Some(res) = f.residues() else {
        return invalid("testers read field-valued tables");
    };
    if f.p() != spec.field.p() {
        return invalid("table and tester use different fields");
    }
    if let QuerySampler::ExplicitSupport { n, .. } = &spec.sampler {
        if *n != f.n() {
            return Err(Error::DimensionMismatch { expected: *n, got: f.n() });
        }
    }
    Ok(res)
}

/// Empirical Pr[Γ(f(X_1), .., f(X_q)) = 1] over `trials` sampled tuples.
pub fn run_tester(spec: &TesterSpec, f: &FunctionTable, trials: u64, seed: u64) -> Result<TesterRun> {
    let res = check_table(spec, f)?;
    if trials == 0 {
        return invalid("trials must be >= 1");
    }
    let space = *f.space();
    let chunks = trials.div_ceil(MC_CHUNK) as usize;
    let parts = par::map_indexed(chunks, |c| -> Result<u64> {
        let mut rng = substream(seed, c as u64);
        let count = MC_CHUNK.min(trials - c as u64 * MC_CHUNK);
        let mut accepted = 0u64;
        let mut pts = Vec::with_capacity(spec.q);
        let mut coords = vec![0u8; space.n];
        for _ in 0..count {
            draw_queries(spec, &space, &mut rng, &mut pts)?;
            for _ in 0..spec.symmetrizations {
                let map = random_affine_with(space.field, space.n, &mut rng)?;
                for x in pts.iter_mut() {
                    space.digits_into(*x, &mut coords);
                    *x = space.index_of(&map.apply_raw(&coords));
                }
            }
            accepted += spec.decide(pts.iter().map(|&x| res[x])) as u64;
        }
        Ok(accepted)
    });
    let mut accepted = 0u64;
    for part in parts {
        accepted += part?;
    }
    let a = accepted as f64 / trials as f64;
    let se = (a * (1.0 - a) / trials as f64).sqrt();
    Ok(TesterRun { acceptance: Estimate { value: a, std_error: Some(se), mode: Mode::mc(trials, seed) }, verdict: spec.verdict(a) })
}

/// The same tester with every query tuple passed through one more uniformly
/// random invertible affine map (drawn afresh per trial). Applying this twice
/// composes two such maps, which is again uniform.
pub fn symmetrize_tester(spec: &TesterSpec) -> TesterSpec {
    let mut out = spec.clone();
    out.symmetrizations += 1;
    out
}

/// Exact acceptance by enumeration, available for linear patterns and
/// explicit supports. Symmetrized explicit supports enumerate Y_0 and
/// linearly independent (Y_1, .., Y_r), which is the exact law of the
/// symmetrized tuple.
pub fn exact_acceptance(spec: &TesterSpec, f: &FunctionTable) -> Result<TesterRun> {
    let res = check_table(spec, f)?;
    let space = *f.space();
    let value = match &spec.sampler {
        QuerySampler::BlackBox { .. } => return invalid("black-box samplers have no exact mode"),
        QuerySampler::LinearPattern(sys) => {
            let sys = if spec.symmetrizations > 0 { homogenize(sys)? } else { sys.clone() };
            pattern_acceptance(spec, &space, &sys, res)?
        }
        QuerySampler::ExplicitSupport { support, .. } => {
            let mut total = 0.0;
            for s in support {
                let pts: Vec<usize> = s.points.iter().map(|pt| space.index_of(pt)).collect();
                let a = if spec.symmetrizations == 0 {
                    spec.decide(pts.iter().map(|&x| res[x])) as f64
                } else {
                    symmetrized_point_acceptance(spec, &space, &pts, res)?
                };
                total += s.prob * a;
            }
            total
        }
    };
    Ok(TesterRun { acceptance: Estimate::exact(value), verdict: spec.verdict(value) })
}

fn pattern_acceptance(spec: &TesterSpec, space: &Space, sys: &LinearSystem, res: &[u8]) -> Result<f64> {
    let walker = FormWalker::new(space.field, space.n, sys.k(), sys.forms(), 256)?;
    let parts = par::map_indexed(walker.chunks(), |c| {
        let mut acc = 0u64;
        walker.walk_chunk(c, &mut |idx| acc += spec.decide(idx.iter().map(|&x| res[x])) as u64);
        acc
    });
    Ok(parts.iter().sum::<u64>() as f64 / walker.total() as f64)
}

/// Coefficients λ with x_i − x_1 = Σ_j λ_ij b_j for a basis b of the
/// differences, and the basis itself.
fn difference_coordinates(space: &Space, pts: &[usize]) -> (Vec<Vec<u8>>, Vec<Vec<u8>>) {
    let field = space.field;
    let diffs: Vec<Vec<u8>> = pts.iter().map(|&x| space.vector(space.sub(x, pts[0])).coords).collect();
    let basis: Vec<Vec<u8>> = linalg::basis_indices(field, &diffs).into_iter().map(|i| diffs[i].clone()).collect();
    let lambda = diffs.iter().map(|d| linalg::express(field, &basis, d).expect("difference lies in the span of its basis")).collect();
    (basis, lambda)
}

fn symmetrized_point_acceptance(spec: &TesterSpec, space: &Space, pts: &[usize], res: &[u8]) -> Result<f64> {
    let (basis, lambda) = difference_coordinates(space, pts);
    let r = basis.len();
    check_budget(pow_u128(space.size() as u64, r + 1))?;
    // Enumerate linearly independent (Y_1..Y_r) depth-first.
    let mut accepted = 0u64;
    let mut tuples = 0u64;
    let mut ys = Vec::with_capacity(r);
    let mut pts_out = vec![0usize; pts.len()];
    #[allow(clippy::too_many_arguments)]
    fn rec(
        spec: &TesterSpec,
        space: &Space,
        lambda: &[Vec<u8>],
        r: usize,
        ys: &mut Vec<usize>,
        res: &[u8],
        pts_out: &mut [usize],
        accepted: &mut u64,
        tuples: &mut u64,
    ) {
        if ys.len() == r {
            let offsets: Vec<usize> = lambda.iter().map(|l| l.iter().zip(ys.iter()).fold(0usize, |acc, (&c, &y)| space.combine(1, acc, c, y))).collect();
            for y0 in 0..space.size() {
                for (o, &off) in pts_out.iter_mut().zip(&offsets) {
                    *o = space.add(y0, off);
                }
                *accepted += spec.decide(pts_out.iter().map(|&x| res[x])) as u64;
                *tuples += 1;
            }
            return;
        }
        let span: Vec<Vec<u8>> = ys.iter().map(|&y| space.vector(y).coords).collect();
        for y in 1..space.size() {
            if !linalg::in_span(space.field, &span, &space.vector(y).coords) {
                ys.push(y);
                rec(spec, space, lambda, r, ys, res, pts_out, accepted, tuples);
                ys.pop();
            }
        }
    }
    rec(spec, space, &lambda, r, &mut ys, res, &mut pts_out, &mut accepted, &mut tuples);
    if tuples == 0 {
        return invalid(format!("rank {r} exceeds n = {}", space.n));
    }
    Ok(accepted as f64 / tuples as f64)
}

/// Homogeneous system with the same law as (A L_i(X))_i for a uniform affine
/// A: L itself in canonical form when homogeneous, else {(1, L_i)}.
fn homogenize(sys: &LinearSystem) -> Result<LinearSystem> {
    if sys.is_homogeneous() {
        return sys.canonicalize_homogeneous();
    }
    let forms = sys.forms().iter().map(|l| std::iter::once(1).chain(l.iter().copied()).collect()).collect();
    LinearSystem::from_multiset(sys.field(), sys.k() + 1, forms)?.canonicalize_homogeneous()
}

/// One (L, β) pair of a profile, with complex weight prob·Γ̂(β).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileEntry {
    pub system: Vec<Vec<u8>>,
    pub k: usize,
    pub beta: Vec<u8>,
    pub weight: [f64; 2],
    /// Index of the support point (0 for linear patterns).
    pub source: usize,
    /// Rank r of the query differences.
    pub span_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearFormProfile {
    pub p: u32,
    pub n: Option<usize>,
    pub entries: Vec<ProfileEntry>,
    /// Bound on |Σ weight·t* − acceptance of the symmetrized tester|: the
    /// largest probability, over support points, that r uniform vectors of
    /// F_p^n are linearly dependent, 1 − ∏_{j<r} (1 − p^{j−n}).
    pub correction: f64,
}

impl LinearFormProfile {
    /// Σ weight·t*_{L,β}(f), computed exactly.
    pub fn evaluate(&self, f: &FunctionTable) -> Result<Complex64> {
        let field = f.field();
        let mut total = Complex64::new(0.0, 0.0);
        for e in &self.entries {
            let sys = LinearSystem::from_multiset(field, e.k, e.system.clone())?;
            let t = linear_form_average(&sys, Payload::Coefficients(f, &e.beta), Mode::Exact)?.value;
            total += Complex64::new(e.weight[0], e.weight[1]) * t;
        }
        Ok(total)
    }
}

/// Rewrites the symmetrized tester as a weighted combination of
/// t*_{L,β} averages over homogeneous systems. The profile always describes
/// the symmetrized tester, whether or not `spec` was symmetrized.
pub fn extract_linear_form_profile(spec: &TesterSpec) -> Result<LinearFormProfile> {
    let field = spec.field;
    let weights = spec.decision_fourier();
    let q_space = Space::new(field, spec.q)?;
    let nonzero: Vec<(Vec<u8>, Complex64)> = weights
        .iter()
        .enumerate()
        .filter(|(_, w)| w.norm() > 1e-14)
        .map(|(i, &w)| (q_space.vector(i).coords, w))
        .collect();
    let mut entries = Vec::new();
    let mut push = |system: &LinearSystem, prob: f64, source: usize, span_rank: usize| {
        for (beta, w) in &nonzero {
            let w = w * prob;
            entries.push(ProfileEntry { system: system.forms().to_vec(), k: system.k(), beta: beta.clone(), weight: [w.re, w.im], source, span_rank });
        }
    };
    match &spec.sampler {
        QuerySampler::BlackBox { .. } => Err(Error::InvalidArgument("cannot extract a profile from a black-box sampler".into())),
        QuerySampler::LinearPattern(sys) => {
            let h = homogenize(sys)?;
            push(&h, 1.0, 0, linalg::rank(field, sys.forms()));
            Ok(LinearFormProfile { p: field.p(), n: None, entries, correction: 0.0 })
        }
        QuerySampler::ExplicitSupport { n, support } => {
            let space = Space::new(field, *n)?;
            let mut correction: f64 = 0.0;
            for (i, s) in support.iter().enumerate() {
                if s.prob == 0.0 {
                    continue;
                }
                let pts: Vec<usize> = s.points.iter().map(|pt| space.index_of(pt)).collect();
                let (basis, lambda) = difference_coordinates(&space, &pts);
                let r = basis.len();
                let forms = lambda.into_iter().map(|l| std::iter::once(1).chain(l).collect()).collect();
                let sys = LinearSystem::from_multiset(field, r + 1, forms)?;
                push(&sys, s.prob, i, r);
                let p = field.p() as f64;
                let indep: f64 = (0..r).map(|j| 1.0 - p.powi(j as i32 - *n as i32)).product();
                correction = correction.max(1.0 - indep);
            }
            Ok(LinearFormProfile { p: field.p(), n: Some(*n), entries, correction })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::gowers_norm_power;
    use crate::field::rng_from_seed;
    use crate::polynomials::{random_polynomial, Polynomial};

    fn fld(p: u32) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn polynomials_pass_the_uniformity_test() {
        let q = random_polynomial(3, 3, 2, false, 1).unwrap();
        let f = FunctionTable::from_polynomial(&q).unwrap();
        let r = uniformity_test(&f, 2, 500, 4, 0.9).unwrap();
        assert!((r.estimate.value - 1.0).abs() < 1e-12 && r.accept);
        assert_eq!(r.queries, 500 * 8);
        let lin = FunctionTable::from_polynomial(&Polynomial::parse(fld(2), 4, "x1 + x3").unwrap()).unwrap();
        assert!((uniformity_test(&lin, 1, 100, 0, 0.5).unwrap().estimate.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniformity_estimate_matches_exact_norm() {
        let f = FunctionTable::random_field(fld(2), 4, &mut rng_from_seed(3)).unwrap();
        let exact = gowers_norm_power(&f, 2, Mode::Exact).unwrap().value;
        let r = uniformity_test(&f, 1, 20_000, 11, 0.5).unwrap();
        assert!((r.estimate.value - exact).abs() <= 4.0 / (20_000f64).sqrt());
    }

    #[test]
    fn constant_decisions() {
        let sys = LinearSystem::new(fld(2), 1, vec![vec![1]]).unwrap();
        let f = FunctionTable::random_field(fld(2), 3, &mut rng_from_seed(0)).unwrap();
        for b in [0u8, 1] {
            let spec = TesterSpec::new(fld(2), QuerySampler::LinearPattern(sys.clone()), vec![b; 2], 0.2, 0.8, 0.5, 0.1).unwrap();
            assert_eq!(run_tester(&spec, &f, 1000, 1).unwrap().acceptance.value, b as f64);
        }
    }

    #[test]
    fn spec_validation() {
        let sys = LinearSystem::new(fld(2), 1, vec![vec![1]]).unwrap();
        let pat = QuerySampler::LinearPattern(sys);
        assert!(TesterSpec::new(fld(2), pat.clone(), vec![1; 3], 0.2, 0.8, 0.5, 0.1).is_err());
        assert!(TesterSpec::new(fld(2), pat.clone(), vec![1; 2], 0.8, 0.2, 0.5, 0.1).is_err());
        assert!(TesterSpec::new(fld(2), pat, vec![1; 2], 0.2, 0.8, 0.1, 0.5).is_err());
        let bad: SamplerFn = Arc::new(|_, _| vec![0, 0]);
        let spec = TesterSpec::new(fld(2), QuerySampler::BlackBox { q: 1, sampler: bad }, vec![0, 1], 0.2, 0.8, 0.5, 0.1).unwrap();
        let f = FunctionTable::random_field(fld(2), 2, &mut rng_from_seed(0)).unwrap();
        assert!(run_tester(&spec, &f, 10, 0).is_err());
        assert!(extract_linear_form_profile(&spec).is_err());
    }

    #[test]
    fn u2_tester_acceptance_formula() {
        let spec = uniformity_tester_spec(2, 1, 0.5, 0.1).unwrap();
        let f = FunctionTable::random_field(fld(2), 4, &mut rng_from_seed(5)).unwrap();
        let exact = exact_acceptance(&spec, &f).unwrap().acceptance.value;
        let u2 = gowers_norm_power(&f, 2, Mode::Exact).unwrap().value;
        assert!((exact - (1.0 + u2) / 2.0).abs() < 1e-12);
        let sym = symmetrize_tester(&spec);
        assert!((exact_acceptance(&sym, &f).unwrap().acceptance.value - exact).abs() < 1e-12);
    }

    #[test]
    fn u2_profile() {
        let spec = uniformity_tester_spec(2, 1, 0.5, 0.1).unwrap();
        let prof = extract_linear_form_profile(&spec).unwrap();
        assert_eq!(prof.entries.len(), 2);
        let e = &prof.entries[1];
        assert_eq!(e.system, vec![vec![1, 0, 0], vec![1, 0, 1], vec![1, 1, 0], vec![1, 1, 1]]);
        assert_eq!(e.beta, vec![1, 1, 1, 1]);
        assert!(prof.entries.iter().all(|e| e.system.iter().all(|l| l[0] == 1)));
        let f = FunctionTable::random_field(fld(2), 3, &mut rng_from_seed(2)).unwrap();
        let exact = exact_acceptance(&spec, &f).unwrap().acceptance.value;
        assert!((prof.evaluate(&f).unwrap() - exact).norm() < 1e-12);
    }

    #[test]
    fn single_query_profile() {
        let sys = LinearSystem::new(fld(3), 1, vec![vec![1]]).unwrap();
        let spec = TesterSpec::new(fld(3), QuerySampler::LinearPattern(sys), vec![1, 0, 0], 0.2, 0.8, 0.5, 0.1).unwrap();
        let prof = extract_linear_form_profile(&spec).unwrap();
        assert!(prof.entries.iter().all(|e| e.system == vec![vec![1]]));
    }

    #[test]
    fn explicit_support_profile_reconstruction() {
        let support = vec![
            SupportPoint { points: vec![vec![0, 0, 0], vec![1, 0, 0], vec![0, 1, 0]], prob: 0.5 },
            SupportPoint { points: vec![vec![1, 1, 0], vec![1, 1, 0], vec![2, 0, 1]], prob: 0.5 },
        ];
        let decision: Vec<u8> = (0..27).map(|i| u8::from(i % 4 == 1 || i % 5 == 0)).collect();
        let spec = TesterSpec::new(fld(3), QuerySampler::ExplicitSupport { n: 3, support }, decision, 0.2, 0.8, 0.5, 0.1).unwrap();
        let f = FunctionTable::random_field(fld(3), 3, &mut rng_from_seed(6)).unwrap();
        let exact = exact_acceptance(&symmetrize_tester(&spec), &f).unwrap().acceptance.value;
        let prof = extract_linear_form_profile(&spec).unwrap();
        let rec = prof.evaluate(&f).unwrap();
        assert!(rec.im.abs() < 1e-12);
        assert!((rec.re - exact).abs() <= prof.correction + 1e-12);
        assert!(prof.correction > 0.0 && prof.correction <= 9.0 / 27.0);
        let mc = run_tester(&symmetrize_tester(&spec), &f, 20_000, 3).unwrap().acceptance;
        assert!((mc.value - exact).abs() < 4.0 * mc.std_error.unwrap() + 1e-3);
    }
}
