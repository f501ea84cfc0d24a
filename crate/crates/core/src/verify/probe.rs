//! Uniqueness probes through the `H_p` family, and the brute-force oracle
//! for implementability on small atomic priors.

use crate::bounds::check_q;
use crate::dist::{AtomicDist, Domain};
use crate::error::{Error, Result};
use crate::experiment::{discretize_experiment, matching_experiment, Experiment, FiniteExperiment};
use crate::optimize::hp_distribution;

use super::feasibility::{feasibility_check, Certificate, Feasibility, FeasibilityProblem, Mode};

/// A `p` whose `H_p` the experiment cannot implement.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeFailure {
    pub p: f64,
    pub certificate: Certificate,
}

fn as_finite(exp: &Experiment) -> Result<FiniteExperiment> {
    match exp {
        Experiment::Finite(f) => Ok(f.clone()),
        Experiment::Parametric(p) => {
            if !p.prior().is_atomic() {
                return Err(Error::precondition(
                    "uniqueness probes need an atomic prior so the experiment discretizes exactly",
                ));
            }
            let d = discretize_experiment(p, 1)?;
            if !d.exact {
                return Err(Error::precondition(
                    "experiment does not discretize exactly on this prior",
                ));
            }
            Ok(d.experiment)
        }
    }
}

/// The values of `p` in `p_grid` for which `H_p` is not implemented by the
/// experiment, with a certificate for each. The prior must be atomic, so
/// that every `H_p` is atomic on the prior's support.
pub fn uniqueness_probe(exp: &Experiment, q: f64, p_grid: &[f64]) -> Result<Vec<ProbeFailure>> {
    check_q(q)?;
    let finite = as_finite(exp)?;
    let prior = finite.prior().clone();
    if !prior.is_atomic() {
        return Err(Error::precondition(
            "uniqueness probes need an atomic prior",
        ));
    }
    let mut failures = Vec::new();
    for &p in p_grid {
        let target = hp_distribution(p, &prior, q)?.to_atomic()?;
        let prob = FeasibilityProblem::new(finite.clone(), target, Mode::Fractional);
        if let Feasibility::Infeasible { certificate } = feasibility_check(&prob, q)? {
            failures.push(ProbeFailure { p, certificate });
        }
    }
    Ok(failures)
}

/// Largest prior accepted by [`brute_force_implementable`].
pub const BRUTE_FORCE_MAX_ATOMS: usize = 8;

/// Decides implementability by solving the transportation problem for the
/// discretized matching experiment, without using the bounds.
pub fn brute_force_implementable(prior: &AtomicDist, q: f64, target: &AtomicDist) -> Result<bool> {
    check_q(q)?;
    if prior.atoms().len() > BRUTE_FORCE_MAX_ATOMS {
        return Err(Error::precondition(format!(
            "brute force handles at most {BRUTE_FORCE_MAX_ATOMS} prior atoms"
        )));
    }
    if target
        .support()
        .any(|x| !prior.support().any(|y| (x - y).abs() <= crate::TOL))
    {
        return Err(Error::precondition("target must live on the prior's atoms"));
    }
    let domain = atom_domain(prior)?;
    let f = prior.to_cdf(domain)?;
    let d = discretize_experiment(&matching_experiment(&f, q)?, 1)?;
    let prob = FeasibilityProblem::new(d.experiment, target.clone(), Mode::Fractional);
    Ok(feasibility_check(&prob, q)?.is_feasible())
}

/// The smallest domain holding all atoms, widened when there is only one.
pub fn atom_domain(dist: &AtomicDist) -> Result<Domain> {
    let lo = dist.atoms().first().map(|a| a.0).unwrap_or(0.0);
    let hi = dist.atoms().last().map(|a| a.0).unwrap_or(1.0);
    if hi > lo {
        Domain::new(lo, hi)
    } else {
        Domain::new(lo, lo + 1.0)
    }
}

#[cfg(test)]
fn implementable_by_bounds(prior: &AtomicDist, q: f64, target: &AtomicDist) -> Result<bool> {
    let domain = atom_domain(prior)?;
    let f: crate::dist::Cdf = prior.to_cdf(domain)?;
    let h = target.to_cdf(domain)?;
    Ok(crate::bounds::is_implementable(&h, &f, q)?.is_yes())
}
