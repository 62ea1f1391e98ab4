//! Linear independence of boundary functions f^{∂L_1}, .., f^{∂L_k} for
//! random f: F_p^n → (0,1), decided through the Gram matrix
//! G_ij = E[f^{∂L_i}(X) f^{∂L_j}(X)].

use nalgebra::DMatrix;
use serde::Serialize;

use crate::analysis::{boundary_function, FunctionTable};
use crate::error::{invalid, Error, Result};
use crate::field::{substream, PrimeField};
use crate::linear_forms::{are_isomorphic, connected_components, IsoOutcome, LinearSystem};

/// Minimum singular value above which the boundary functions count as
/// linearly independent.
pub const INDEPENDENCE_THRESHOLD: f64 = 1e-6;

/// What to do when the supplied systems violate the theorem's hypotheses
/// (pairwise non-isomorphic, each connected).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisGate {
    /// Reject with the failing certificate.
    Enforce,
    /// Run anyway and list the violations in the report.
    Report,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteriorReport {
    /// Gram matrix of the best-conditioned trial.
    pub gram: Vec<Vec<f64>>,
    pub min_singular_value: f64,
    /// Smallest eigenvalue of the same Gram matrix (PSD check).
    pub min_eigenvalue: f64,
    pub independent: bool,
    /// f of the best-conditioned trial.
    pub witness: Vec<f64>,
    pub witness_trial: usize,
    pub first_independent_trial: Option<usize>,
    pub trials: usize,
    pub hypothesis_violations: Vec<String>,
}

fn check_hypotheses(systems: &[LinearSystem]) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (i, s) in systems.iter().enumerate() {
        let comps = connected_components(s)?;
        if comps.len() > 1 {
            out.push(format!("system {i} is disconnected: components {comps:?}"));
        }
    }
    for i in 0..systems.len() {
        for j in i + 1..systems.len() {
            match are_isomorphic(&systems[i], &systems[j])? {
                IsoOutcome::Isomorphic { witness } => out.push(format!("systems {i} and {j} are isomorphic: form map {witness:?}")),
                IsoOutcome::Undecided { reason } => out.push(format!("isomorphism of systems {i} and {j} undecided: {reason}")),
                IsoOutcome::NotIsomorphic => {}
            }
        }
    }
    Ok(out)
}

pub fn interior_experiment(
    systems: &[LinearSystem],
    p: u32,
    n: usize,
    trials: usize,
    seed: u64,
    gate: HypothesisGate,
) -> Result<InteriorReport> {
    if systems.is_empty() || trials == 0 {
        return invalid("need at least one system and one trial");
    }
    let field = PrimeField::new(p)?;
    if systems.iter().any(|s| s.p() != p) {
        return invalid(format!("all systems must be over F_{p}"));
    }
    let violations = check_hypotheses(systems)?;
    if gate == HypothesisGate::Enforce && !violations.is_empty() {
        return Err(Error::Hypothesis(violations.join("; ")));
    }
    let k = systems.len();
    let mut best: Option<(f64, DMatrix<f64>, Vec<f64>, usize)> = None;
    let mut first = None;
    for t in 0..trials {
        let mut rng = substream(seed, t as u64);
        // lo + (1 − lo)·U with U ∈ [0,1) keeps every value inside (0,1).
        let f = FunctionTable::random_real(field, n, 1e-9, 1.0, &mut rng)?;
        let bs = systems.iter().map(|s| boundary_function(&f, s)).collect::<Result<Vec<_>>>()?;
        let mut g = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let v = bs[i].values().iter().zip(bs[j].values()).map(|(a, b)| a.re * b.re).sum::<f64>() / f.len() as f64;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        let smin = g.clone().svd(false, false).singular_values.min();
        if smin > INDEPENDENCE_THRESHOLD && first.is_none() {
            first = Some(t);
        }
        if best.as_ref().is_none_or(|b| smin > b.0) {
            best = Some((smin, g, f.values().iter().map(|z| z.re).collect(), t));
        }
    }
    let (smin, g, witness, witness_trial) = best.expect("at least one trial ran");
    let min_eigenvalue = g.clone().symmetric_eigen().eigenvalues.min();
    Ok(InteriorReport {
        gram: (0..k).map(|i| (0..k).map(|j| g[(i, j)]).collect()).collect(),
        min_singular_value: smin,
        min_eigenvalue,
        independent: smin > INDEPENDENCE_THRESHOLD,
        witness,
        witness_trial,
        first_independent_trial: first,
        trials,
        hypothesis_violations: violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_forms::catalogue;

    fn fld(p: u32) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn single_form() {
        let sys = LinearSystem::new(fld(3), 1, vec![vec![1]]).unwrap();
        let r = interior_experiment(&[sys], 3, 2, 3, 1, HypothesisGate::Enforce).unwrap();
        assert!((r.gram[0][0] - 1.0).abs() < 1e-12);
        assert!(r.independent);
    }

    #[test]
    fn isomorphic_pair_is_rejected() {
        let a = catalogue::progression(3, 3).unwrap();
        let b = LinearSystem::new(fld(3), 2, vec![vec![1, 2], vec![1, 1], vec![1, 0]]).unwrap();
        match interior_experiment(&[a.clone(), b.clone()], 3, 2, 2, 0, HypothesisGate::Enforce) {
            Err(Error::Hypothesis(msg)) => assert!(msg.contains("isomorphic")),
            other => panic!("expected a hypothesis error, got {other:?}"),
        }
        let r = interior_experiment(&[a, b], 3, 2, 2, 0, HypothesisGate::Report).unwrap();
        assert!(!r.independent);
        assert_eq!(r.hypothesis_violations.len(), 1);
    }

    #[test]
    fn gram_is_psd() {
        let a = catalogue::progression(3, 3).unwrap();
        let b = catalogue::pair(3).unwrap();
        let r = interior_experiment(&[a, b], 3, 2, 5, 3, HypothesisGate::Report).unwrap();
        assert!(r.min_eigenvalue > -1e-9);
        assert!((r.gram[0][1] - r.gram[1][0]).abs() < 1e-15);
        assert!(r.hypothesis_violations.iter().any(|v| v.contains("disconnected")));
    }
}
