//! Property tests over seeded random instances. Each case draws a seed and a
//! few small parameters; objects are then built from the seed so failures
//! shrink to a reproducible instance.

use hofa_core::analysis::{
    fourier_transform, gowers_norm, inner_product, inverse_fourier, linear_form_average, multiplicative_derivative, t_l, FunctionTable,
    Payload,
};
use hofa_core::factors::{conditional_expectation, factor_fourier, factor_fourier_reconstruct, PolynomialFactor};
use hofa_core::field::{enumerate_vectors, random_affine_with, rng_from_seed, PrimeField, Space};
use hofa_core::linear_forms::{are_isomorphic, catalogue, connected_components, cs_complexity, form_degree, true_complexity, LinearSystem};
use hofa_core::polynomials::{bias, random_polynomial_with};
use hofa_core::Mode;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

const TOL: f64 = 1e-9;

fn fld(p: u32) -> PrimeField {
    PrimeField::new(p).unwrap()
}

/// (p, n) pairs small enough for exact U^3.
fn small_space() -> impl Strategy<Value = (u32, usize)> {
    prop_oneof![Just((2u32, 2usize)), Just((2, 3)), Just((2, 4)), Just((3, 2)), Just((3, 3)), Just((5, 2))]
}

fn random_invertible<R: Rng>(field: PrimeField, k: usize, rng: &mut R) -> Vec<Vec<u8>> {
    loop {
        let m: Vec<Vec<u8>> = (0..k).map(|_| (0..k).map(|_| rng.random_range(0..field.p()) as u8).collect()).collect();
        let sys = LinearSystem::from_multiset(field, k, m.clone()).unwrap();
        if sys.span_dim() == k {
            return m;
        }
    }
}

/// Forms l ↦ l·M for an invertible k×k matrix M.
fn change_variables(sys: &LinearSystem, m: &[Vec<u8>]) -> LinearSystem {
    let f = sys.field();
    let k = sys.k();
    let forms = sys
        .forms()
        .iter()
        .map(|l| (0..k).map(|j| (0..k).fold(0u8, |acc, i| f.add(acc, f.mul(l[i], m[i][j])))).collect())
        .collect();
    LinearSystem::new(f, k, forms).unwrap()
}

fn catalogue_system(which: usize, p: u32) -> LinearSystem {
    match which % 4 {
        0 => catalogue::schur(p).unwrap(),
        1 => catalogue::pair(p).unwrap(),
        2 if p >= 3 => catalogue::progression(p, 3).unwrap(),
        _ => catalogue::cube(p, 2).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn affine_maps_permute_the_space((p, n) in small_space(), seed in any::<u64>()) {
        let field = fld(p);
        let space = Space::new(field, n).unwrap();
        let map = random_affine_with(field, n, &mut rng_from_seed(seed)).unwrap();
        let mut image = map.permutation(&space).unwrap();
        image.sort_unstable();
        prop_assert_eq!(image, (0..space.size()).collect::<Vec<_>>());
    }

    #[test]
    fn vectors_enumerate_once((p, n) in small_space()) {
        let all: Vec<_> = enumerate_vectors(p, n).unwrap().collect();
        let space = Space::new(fld(p), n).unwrap();
        prop_assert_eq!(all.len(), space.size());
        let mut seen: Vec<usize> = all.iter().map(|v| space.index_of(&v.coords)).collect();
        seen.sort_unstable();
        seen.dedup();
        prop_assert_eq!(seen.len(), space.size());
    }

    #[test]
    fn parseval_and_inversion((p, n) in small_space(), seed in any::<u64>()) {
        let f = FunctionTable::random_disk(fld(p), n, &mut rng_from_seed(seed)).unwrap();
        let spec = fourier_transform(&f);
        prop_assert!((spec.energy() - f.l2_squared()).abs() <= TOL);
        prop_assert!(inverse_fourier(&spec).max_abs_diff(&f) <= TOL);
    }

    #[test]
    fn mean_bound_and_monotonicity((p, n) in small_space(), seed in any::<u64>()) {
        let f = FunctionTable::random_disk(fld(p), n, &mut rng_from_seed(seed)).unwrap();
        let norms: Vec<f64> = (1..=3).map(|k| gowers_norm(&f, k, Mode::Exact).unwrap().value).collect();
        prop_assert!((norms[0] - f.mean().norm()).abs() <= TOL);
        prop_assert!(norms[0] <= norms[1] + TOL);
        prop_assert!(norms[1] <= norms[2] + TOL);
        prop_assert!(norms[2] <= 1.0 + TOL);
    }

    #[test]
    fn gowers_norm_axioms((p, n) in small_space(), k in 2usize..=3, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let f = FunctionTable::random_disk(fld(p), n, &mut rng).unwrap();
        let g = FunctionTable::random_disk(fld(p), n, &mut rng).unwrap();
        let c = Complex64::from_polar(rng.random::<f64>(), rng.random::<f64>() * 6.0);
        let nf = gowers_norm(&f, k, Mode::Exact).unwrap().value;
        let ng = gowers_norm(&g, k, Mode::Exact).unwrap().value;
        let scaled = f.map_values(|z| z * c);
        prop_assert!((gowers_norm(&scaled, k, Mode::Exact).unwrap().value - c.norm() * nf).abs() <= TOL);
        // f + g can leave the unit disk; halve both sides of the inequality.
        let half_sum = f.add_scaled(1.0, &g).unwrap().map_values(|z| z * 0.5);
        prop_assert!(gowers_norm(&half_sum, k, Mode::Exact).unwrap().value <= 0.5 * (nf + ng) + TOL);
    }

    #[test]
    fn phase_modulation_invariance((p, n) in small_space(), d in 1u32..=2, seed in any::<u64>()) {
        let field = fld(p);
        let d = d.min(n as u32 * (p - 1));
        let mut rng = rng_from_seed(seed);
        let f = FunctionTable::random_disk(field, n, &mut rng).unwrap();
        let phase = FunctionTable::from_polynomial(&random_polynomial_with(field, n, d, false, &mut rng).unwrap()).unwrap();
        let k = d as usize + 1;
        let modulated = f.mul(&phase).unwrap();
        let lhs = gowers_norm(&modulated, k, Mode::Exact).unwrap().value;
        prop_assert!((lhs - gowers_norm(&f, k, Mode::Exact).unwrap().value).abs() <= TOL);
    }

    #[test]
    fn gowers_norms_are_affine_invariant((p, n) in small_space(), seed in any::<u64>()) {
        let field = fld(p);
        let mut rng = rng_from_seed(seed);
        let f = FunctionTable::random_disk(field, n, &mut rng).unwrap();
        let g = f.compose_affine(&random_affine_with(field, n, &mut rng).unwrap()).unwrap();
        for k in 2..=3 {
            let a = gowers_norm(&f, k, Mode::Exact).unwrap().value;
            let b = gowers_norm(&g, k, Mode::Exact).unwrap().value;
            prop_assert!((a - b).abs() <= TOL);
        }
    }

    #[test]
    fn derivative_bridge((p, n) in small_space(), d in 1u32..=3, seed in any::<u64>()) {
        let field = fld(p);
        let d = d.min(n as u32 * (p - 1));
        let mut rng = rng_from_seed(seed);
        let poly = random_polynomial_with(field, n, d, false, &mut rng).unwrap();
        let space = Space::new(field, n).unwrap();
        let y = space.random_point(&mut rng);
        let dp = poly.additive_derivative(&space.vector(y)).unwrap();
        prop_assert!(dp.degree() < poly.degree());
        let phase = FunctionTable::from_polynomial(&poly).unwrap();
        let lhs = FunctionTable::from_polynomial(&dp).unwrap();
        let rhs = multiplicative_derivative(&space, phase.values(), y);
        let err = lhs.values().iter().zip(&rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err <= TOL);
    }

    #[test]
    fn bias_is_affine_invariant((p, n) in small_space(), d in 1u32..=2, seed in any::<u64>()) {
        let field = fld(p);
        let mut rng = rng_from_seed(seed);
        let poly = random_polynomial_with(field, n, d, false, &mut rng).unwrap();
        let map = random_affine_with(field, n, &mut rng).unwrap();
        let a = bias(&poly, Mode::Exact).unwrap().value;
        let b = bias(&poly.compose_affine(&map).unwrap(), Mode::Exact).unwrap().value;
        prop_assert!((a - b).abs() <= TOL);
    }

    #[test]
    fn isomorphic_systems_share_averages_and_invariants(which in 0usize..4, p in prop_oneof![Just(3u32), Just(5)], seed in any::<u64>()) {
        let sys = catalogue_system(which, p);
        let mut rng = rng_from_seed(seed);
        let m = random_invertible(sys.field(), sys.k(), &mut rng);
        let other = change_variables(&sys, &m);
        prop_assert!(are_isomorphic(&sys, &other).unwrap().is_isomorphic());
        prop_assert!(are_isomorphic(&other, &sys).unwrap().is_isomorphic());
        prop_assert_eq!(cs_complexity(&sys).unwrap().value, cs_complexity(&other).unwrap().value);
        prop_assert_eq!(true_complexity(&sys).unwrap(), true_complexity(&other).unwrap());
        let mut a: Vec<usize> = sys.forms().iter().map(|l| form_degree(&sys, l)).collect();
        let mut b: Vec<usize> = other.forms().iter().map(|l| form_degree(&other, l)).collect();
        a.sort_unstable();
        b.sort_unstable();
        prop_assert_eq!(a, b);
        let f = FunctionTable::random_disk(sys.field(), 2, &mut rng).unwrap();
        prop_assert!((t_l(&sys, &f).unwrap() - t_l(&other, &f).unwrap()).norm() <= TOL);
    }

    #[test]
    fn true_complexity_below_cs(which in 0usize..4, p in prop_oneof![Just(2u32), Just(3), Just(5)]) {
        let sys = catalogue_system(which, p);
        if let Ok(t) = true_complexity(&sys) {
            prop_assert!(t <= cs_complexity(&sys).unwrap().value);
        }
    }

    #[test]
    fn components_are_connected(p in prop_oneof![Just(2u32), Just(3)], seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let k = rng.random_range(1..=3usize);
        let forms: Vec<Vec<u8>> = (0..rng.random_range(1..=4usize))
            .map(|_| (0..k).map(|_| rng.random_range(0..p) as u8).collect())
            .filter(|l: &Vec<u8>| l.iter().any(|&c| c != 0))
            .collect();
        prop_assume!(!forms.is_empty());
        let Ok(sys) = LinearSystem::new(fld(p), k, forms) else { return Ok(()) };
        for part in connected_components(&sys).unwrap() {
            let sub = sys.subsystem(&part).unwrap();
            prop_assert_eq!(connected_components(&sub).unwrap().len(), 1);
        }
    }

    #[test]
    fn per_form_average_bounded_by_product_of_sup_norms((p, n) in small_space(), which in 0usize..4, seed in any::<u64>()) {
        let sys = catalogue_system(which, p);
        let mut rng = rng_from_seed(seed);
        let fs: Vec<FunctionTable> = (0..sys.m()).map(|_| FunctionTable::random_disk(sys.field(), n, &mut rng).unwrap()).collect();
        let t = linear_form_average(&sys, Payload::PerForm(&fs), Mode::Exact).unwrap().value;
        prop_assert!(t.norm() <= 1.0 + TOL);
    }

    #[test]
    fn factor_atoms_partition_and_pythagoras((p, n) in small_space(), c in 1usize..=3, seed in any::<u64>()) {
        let field = fld(p);
        let mut rng = rng_from_seed(seed);
        let polys = (0..c).map(|_| {
            let d = rng.random_range(1..=2u32).min(n as u32 * (p - 1));
            random_polynomial_with(field, n, d, false, &mut rng).unwrap()
        }).collect();
        let b = PolynomialFactor::new(field, n, polys).unwrap();
        prop_assert!(b.atom_count() <= (p as usize).pow(c as u32));
        prop_assert_eq!(b.atom_sizes().iter().sum::<usize>(), b.space().size());
        prop_assert!(b.atom_sizes().iter().all(|&s| s > 0));

        let f = FunctionTable::random_disk(field, n, &mut rng).unwrap();
        let e = conditional_expectation(&f, &b).unwrap();
        let r = f.add_scaled(-1.0, &e).unwrap();
        prop_assert!((f.l2_squared() - e.l2_squared() - r.l2_squared()).abs() <= TOL);
        prop_assert!((e.mean() - f.mean()).norm() <= TOL);
        prop_assert!(inner_product(&r, &e).unwrap().norm() <= TOL);

        let rebuilt = factor_fourier_reconstruct(&factor_fourier(&e, &b).unwrap(), &b).unwrap();
        prop_assert!(rebuilt.max_abs_diff(&e) <= TOL);
    }
}
