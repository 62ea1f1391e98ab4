//! Seeded experiments with statistical or frozen expectations.

use hofa_core::analysis::{correlation_with_family, gowers_norm_power, linear_form_average, t_l, FunctionTable, Payload, PolyFamily};
use hofa_core::field::{random_affine_with, rng_from_seed, substream, PrimeField};
use hofa_core::linear_forms::catalogue;
use hofa_core::polynomials::{random_polynomial_with, Polynomial};
use hofa_core::testers::{
    exact_acceptance, extract_linear_form_profile, interior_experiment, run_tester, symmetrize_tester, uniformity_test,
    uniformity_tester_spec, HypothesisGate,
};
use hofa_core::Mode;
use rand::Rng;

fn fld(p: u32) -> PrimeField {
    PrimeField::new(p).unwrap()
}

fn single_threaded<T: Send>(op: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(op)
}

#[test]
fn interior_witness_golden() {
    let systems = [catalogue::progression(3, 3).unwrap(), catalogue::pair(3).unwrap()];
    let r = interior_experiment(&systems, 3, 3, 50, 1313, HypothesisGate::Report).unwrap();
    assert_eq!(r.first_independent_trial, Some(0));
    assert_eq!(r.witness_trial, 23);
    assert!((r.min_singular_value - 7.793278e-3).abs() < 1e-8, "{}", r.min_singular_value);
    assert!(r.min_eigenvalue > -1e-9);
    for (i, row) in r.gram.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            assert!((v - r.gram[j][i]).abs() < 1e-9);
        }
    }
    assert_eq!(r.hypothesis_violations.len(), 1);
}

#[test]
fn interior_enforce_gate_rejects_disconnected_systems() {
    let systems = [catalogue::progression(3, 3).unwrap(), catalogue::pair(3).unwrap()];
    assert!(interior_experiment(&systems, 3, 2, 5, 1, HypothesisGate::Enforce).is_err());
}

#[test]
fn monte_carlo_is_consistent_with_exact() {
    let f = FunctionTable::random_disk(fld(3), 3, &mut rng_from_seed(5)).unwrap();
    let ap = catalogue::progression(3, 3).unwrap();
    let exact = t_l(&ap, &f).unwrap();
    let mc = linear_form_average(&ap, Payload::Plain(&f), Mode::mc(20_000, 9)).unwrap();
    assert!((mc.value - exact).norm() <= 5.0 * mc.std_error.unwrap());

    let exact = gowers_norm_power(&f, 3, Mode::Exact).unwrap().value;
    let mc = gowers_norm_power(&f, 3, Mode::mc(20_000, 9)).unwrap();
    assert!((mc.value - exact).abs() <= 5.0 * mc.std_error.unwrap());
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let f = FunctionTable::random_disk(fld(3), 3, &mut rng_from_seed(17)).unwrap();
    let ap = catalogue::progression(3, 3).unwrap();
    let run = || {
        (
            gowers_norm_power(&f, 3, Mode::Exact).unwrap().value,
            gowers_norm_power(&f, 2, Mode::mc(50_000, 3)).unwrap().value,
            t_l(&ap, &f).unwrap(),
            linear_form_average(&ap, Payload::Plain(&f), Mode::mc(50_000, 3)).unwrap().value,
            correlation_with_family(&f, PolyFamily::new(2)).unwrap().value,
        )
    };
    let parallel = run();
    let serial = single_threaded(run);
    assert_eq!(parallel.0.to_bits(), serial.0.to_bits());
    assert_eq!(parallel.1.to_bits(), serial.1.to_bits());
    assert_eq!(parallel.2, serial.2);
    assert_eq!(parallel.3, serial.3);
    assert_eq!(parallel.4.to_bits(), serial.4.to_bits());
}

#[test]
fn uniformity_test_reads_two_to_the_d_plus_one_entries_per_sample() {
    let f = FunctionTable::random_field(fld(2), 6, &mut rng_from_seed(1)).unwrap();
    for d in 1..=3 {
        let r = uniformity_test(&f, d, 1000, 2, 0.5).unwrap();
        assert_eq!(r.queries, 1000 * (1 << (d + 1)));
    }
}

/// Spearman rank correlation with average ranks for ties.
fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for &t in &idx[i..=j] {
                r[t] = (i + j) as f64 / 2.0;
            }
            i = j + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let m = (a.len() as f64 - 1.0) / 2.0;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - m) * (y - m)).sum();
    let va: f64 = ra.iter().map(|x| (x - m).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - m).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Acceptance of the U^{d+1} tester tracks correlation with Poly_d on noisy
/// polynomial phases whose noise rate sweeps [0, 1/2].
#[test]
fn tester_acceptance_tracks_polynomial_correlation() {
    let field = fld(2);
    let n = 5;
    for d in 1..=2u32 {
        let spec = uniformity_tester_spec(2, d, 0.5, 0.25).unwrap();
        let mut rng = rng_from_seed(40 + d as u64);
        let (mut acc, mut corr) = (Vec::new(), Vec::new());
        for i in 0..50 {
            let noise = 0.5 * i as f64 / 49.0;
            let poly = random_polynomial_with(field, n, d, false, &mut rng).unwrap();
            let table: Vec<u8> = poly.to_table().unwrap().into_iter().map(|v| v ^ u8::from(rng.random::<f64>() < noise)).collect();
            let f = FunctionTable::from_field(field, n, table).unwrap();
            acc.push(exact_acceptance(&spec, &f).unwrap().acceptance.value);
            corr.push(correlation_with_family(&f, PolyFamily::new(d)).unwrap().value);
        }
        let rho = spearman(&acc, &corr);
        assert!(rho > 0.8, "d = {d}: Spearman ρ = {rho}");
    }
}

#[test]
fn symmetrized_tester_is_affine_invariant_in_distribution() {
    let field = fld(2);
    let n = 6;
    let trials = 20_000;
    let spec = symmetrize_tester(&uniformity_tester_spec(2, 1, 0.5, 0.25).unwrap());
    let twice = symmetrize_tester(&spec);
    for s in 0..3u64 {
        let mut rng = substream(77, s);
        let f = FunctionTable::random_field(field, n, &mut rng).unwrap();
        let g = f.compose_affine(&random_affine_with(field, n, &mut rng).unwrap()).unwrap();
        let a = run_tester(&spec, &f, trials, 100 + s).unwrap().acceptance;
        let b = run_tester(&spec, &g, trials, 100 + s).unwrap().acceptance;
        let c = run_tester(&twice, &f, trials, 200 + s).unwrap().acceptance;
        let sigma = |x: f64, y: f64| x.hypot(y);
        let (ea, eb, ec) = (a.std_error.unwrap(), b.std_error.unwrap(), c.std_error.unwrap());
        assert!((a.value - b.value).abs() <= 3.0 * sigma(ea, eb), "{a:?} vs {b:?}");
        assert!((a.value - c.value).abs() <= 3.0 * sigma(ea, ec), "{a:?} vs {c:?}");
    }
}

#[test]
fn tester_profile_matches_exact_acceptance() {
    let spec = uniformity_tester_spec(2, 1, 0.5, 0.25).unwrap();
    let profile = extract_linear_form_profile(&spec).unwrap();
    for e in &profile.entries {
        assert!(e.system.iter().all(|l| l[0] == 1));
    }
    let mut rng = rng_from_seed(3);
    for _ in 0..10 {
        let f = FunctionTable::random_field(fld(2), 4, &mut rng).unwrap();
        let exact = exact_acceptance(&spec, &f).unwrap().acceptance.value;
        let predicted = profile.evaluate(&f).unwrap();
        assert!((predicted - exact).norm() <= profile.correction + 1e-9);
    }
}

#[test]
fn linear_phase_passes_and_random_function_fails() {
    let spec = uniformity_tester_spec(2, 1, 0.5, 0.25).unwrap();
    let linear = FunctionTable::from_polynomial(&Polynomial::linear(fld(2), &[1, 0, 1, 1, 0, 1])).unwrap();
    assert!((exact_acceptance(&spec, &linear).unwrap().acceptance.value - 1.0).abs() < 1e-12);
    let random = FunctionTable::random_field(fld(2), 8, &mut rng_from_seed(8)).unwrap();
    let run = run_tester(&spec, &random, 10_000, 1).unwrap();
    assert!(run.acceptance.value < 0.6);
}
