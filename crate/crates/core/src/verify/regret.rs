//! Regret: how far the best distribution an experiment implements falls
//! short of the best implementable distribution.

use crate::dist::{sort_dedup, Neumaier};
use crate::error::Result;
use crate::experiment::{Experiment, ParametricExperiment};
use crate::objective::{argmax_interval, Objective};
use crate::optimize::optimize_quantile_dist;
use crate::Cdf;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegretReport {
    pub opt_value: f64,
    pub implemented_sup: f64,
    pub regret: f64,
}

/// `sup ∫ V(χ(G)) dτ(G)` over selections: each posterior contributes the
/// maximum of `V` on its quantile interval.
pub fn implemented_sup(exp: &Experiment, v: &Objective, q: f64) -> Result<f64> {
    crate::bounds::check_q(q)?;
    let best = |g: &crate::AtomicDist| {
        let iv = g.quantile_interval(q);
        argmax_interval(v, iv.lo, iv.hi).max_value
    };
    match exp {
        Experiment::Finite(f) => {
            let mut acc = Neumaier::default();
            for e in f.entries() {
                acc.add(e.weight * best(&e.posterior));
            }
            Ok(acc.value())
        }
        Experiment::Parametric(p) => Ok(label_integral(p, |l| best(&p.posterior_at(l)))),
    }
}

/// `∫ g dM` over the label law `M`, piece by piece between label
/// breakpoints and knots of `M`, where `M` has constant density.
fn label_integral(exp: &ParametricExperiment, g: impl Fn(f64) -> f64) -> f64 {
    let law = exp.label_law();
    let mut cuts = exp.label_breakpoints();
    cuts.extend(law.knots().iter().map(|k| k.x));
    sort_dedup(&mut cuts);
    let mut acc = Neumaier::default();
    for k in law.knots() {
        if k.jump() > 0.0 {
            acc.add(k.jump() * g(k.x));
        }
    }
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mass = law.before(b) - law.at(a);
        if mass <= 0.0 {
            continue;
        }
        let density = mass / (b - a);
        acc.add(density * adaptive_simpson(&g, a, b, 1e-14, 40));
    }
    acc.value()
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    // stay off the ends, where the integrand may jump
    let inset = (b - a) * 1e-12;
    let (a, b) = (a + inset, b - inset);
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol, depth - 1)
}

/// `r(τ, V) = max_H ∫V dH − sup{∫V dH : H implemented by τ}`.
pub fn regret(exp: &Experiment, v: &Objective, prior: &Cdf, q: f64) -> Result<RegretReport> {
    let opt_value = optimize_quantile_dist(v, prior, q)?.value;
    let implemented_sup = implemented_sup(exp, v, q)?;
    Ok(RegretReport {
        opt_value,
        implemented_sup,
        regret: opt_value - implemented_sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Domain;
    use crate::experiment::{matching_experiment, nam_experiment, FiniteExperiment};

    #[test]
    fn nam_regret_on_centered_quadratic() {
        let f = Cdf::uniform(Domain::unit());
        let v = Objective::quadratic(0.5);
        let nam = nam_experiment(&f, 0.5).unwrap().into();
        let r = regret(&nam, &v, &f, 0.5).unwrap();
        assert!((r.implemented_sup - 1.0 / 12.0).abs() < 1e-10);
        assert!((r.regret - 1.0 / 16.0).abs() < 1e-10);
        let tau = matching_experiment(&f, 0.5).unwrap().into();
        let r = regret(&tau, &v, &f, 0.5).unwrap();
        assert!(r.regret.abs() < 1e-10);
    }

    #[test]
    fn full_revelation_regret() {
        let f = Cdf::atoms(
            Domain::unit(),
            &(1..=8)
                .map(|k| ((2 * k - 1) as f64 / 16.0, 0.125))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let v = Objective::affine(Domain::unit(), 0.0, 1.0);
        let fr = FiniteExperiment::full_revelation(&f).unwrap().into();
        let r = regret(&fr, &v, &f, 0.5).unwrap();
        // mean 1/2 against ∫x dH̲ = (9 + 11 + 13 + 15)/64 = 3/4
        assert!((r.implemented_sup - 0.5).abs() < 1e-12);
        assert!((r.opt_value - 0.75).abs() < 1e-12);
        assert!((r.regret - 0.25).abs() < 1e-12);
    }

    #[test]
    fn simpson_handles_kinks() {
        let g = |x: f64| (x - 0.3).abs();
        let got = adaptive_simpson(&g, 0.0, 1.0, 1e-14, 40);
        assert!((got - (0.045 + 0.245)).abs() < 1e-11);
    }
}
