//! Experiments: distributions over posteriors that average back to the prior.
//!
//! Parametric experiments index their posteriors by a real label drawn from
//! a label law. For the matching and negative-assortative experiments the
//! label is `ω`, uniform on `[0, q]`; for the unique-implementation
//! perturbation it is the state `x` itself (see [`crate::unique`]). Every
//! posterior is a short list of atoms ("branches") whose locations are
//! monotone in the label, which is what lets the label integrals below be
//! computed without quadrature error.

use crate::bounds::check_q;
use crate::dist::{sort_dedup, AtomicDist, Cdf, Domain, Neumaier};
use crate::error::{Error, Result};
use crate::unique::DyadicRefinement;
use crate::TOL;

#[derive(Clone, Debug, PartialEq)]
pub enum ParametricKind {
    /// q-quantile matching: pairs `F⁻¹(ω)` with `F⁻¹(q + (1 − q)ω/q)`.
    Matching,
    /// Negative assortative matching: pairs `F⁻¹(ω)` with `F⁻¹(1 − (1 − q)ω/q)`.
    Nam,
    /// The matching experiment perturbed so that every posterior has the
    /// single q-quantile `x`, implementing `(1 − e)H_n + eF`.
    UniqueImpl {
        refinement: DyadicRefinement,
        e: f64,
        target: Cdf,
    },
}

impl ParametricKind {
    pub fn name(&self) -> &'static str {
        match self {
            ParametricKind::Matching => "matching",
            ParametricKind::Nam => "nam",
            ParametricKind::UniqueImpl { .. } => "unique_impl",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Direction {
    Increasing,
    Decreasing,
}

/// One atom of a parametric posterior.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Branch {
    pub state: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParametricExperiment {
    prior: Cdf,
    q: f64,
    kind: ParametricKind,
    label_law: Cdf,
}

/// The q-quantile matching experiment `τ*`.
pub fn matching_experiment(prior: &Cdf, q: f64) -> Result<ParametricExperiment> {
    ParametricExperiment::new(prior.clone(), q, ParametricKind::Matching)
}

/// The negative assortative matching experiment.
pub fn nam_experiment(prior: &Cdf, q: f64) -> Result<ParametricExperiment> {
    ParametricExperiment::new(prior.clone(), q, ParametricKind::Nam)
}

impl ParametricExperiment {
    pub(crate) fn new(prior: Cdf, q: f64, kind: ParametricKind) -> Result<Self> {
        check_q(q)?;
        let label_law = match &kind {
            ParametricKind::Matching | ParametricKind::Nam => Cdf::uniform(Domain::new(0.0, q)?),
            ParametricKind::UniqueImpl { refinement, e, .. } => {
                crate::dist::mix(&[(1.0 - e, refinement.h_n()), (*e, &prior)])?
            }
        };
        Ok(ParametricExperiment {
            prior,
            q,
            kind,
            label_law,
        })
    }

    pub fn prior(&self) -> &Cdf {
        &self.prior
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn kind(&self) -> &ParametricKind {
        &self.kind
    }

    /// Distribution of the label. Atomless for every built-in kind.
    pub fn label_law(&self) -> &Cdf {
        &self.label_law
    }

    pub fn label_domain(&self) -> Domain {
        self.label_law.domain()
    }

    fn prior_inverse(&self, p: f64) -> f64 {
        self.prior.gen_inverse(p.clamp(0.0, 1.0))
    }

    /// Branch directions, in the order returned by `branches`.
    pub(crate) fn directions(&self) -> &'static [Direction] {
        use Direction::*;
        match self.kind {
            ParametricKind::Matching => &[Increasing, Increasing],
            ParametricKind::Nam => &[Increasing, Decreasing],
            ParametricKind::UniqueImpl { .. } => &[Increasing, Increasing, Increasing],
        }
    }

    pub(crate) fn branch_state(&self, j: usize, label: f64) -> f64 {
        let q = self.q;
        match (&self.kind, j) {
            (ParametricKind::Matching | ParametricKind::Nam, 0) => self.prior_inverse(label),
            (ParametricKind::Matching, _) => self.prior_inverse(q + (1.0 - q) * label / q),
            (ParametricKind::Nam, _) => self.prior_inverse(1.0 - (1.0 - q) * label / q),
            (ParametricKind::UniqueImpl { refinement, .. }, j) => {
                let h = refinement.h_n().at(label);
                match j {
                    0 => self.prior_inverse(q * h),
                    1 => self.prior_inverse(q + (1.0 - q) * h),
                    _ => label,
                }
            }
        }
    }

    pub(crate) fn branch_weight(&self, j: usize, label: f64) -> f64 {
        let q = self.q;
        match &self.kind {
            ParametricKind::Matching | ParametricKind::Nam => {
                if j == 0 {
                    q
                } else {
                    1.0 - q
                }
            }
            ParametricKind::UniqueImpl { refinement, e, .. } => {
                let h = refinement.density_at(label);
                let denom = (1.0 - e) * h + e;
                match j {
                    0 => (1.0 - e) * h * q / denom,
                    1 => (1.0 - e) * h * (1.0 - q) / denom,
                    _ => e / denom,
                }
            }
        }
    }

    pub(crate) fn branches(&self, label: f64) -> Vec<Branch> {
        (0..self.directions().len())
            .map(|j| Branch {
                state: self.branch_state(j, label),
                weight: self.branch_weight(j, label),
            })
            .collect()
    }

    /// The posterior induced at `label`.
    pub fn posterior_at(&self, label: f64) -> AtomicDist {
        let label = self.label_domain().clamp(label);
        let atoms = self
            .branches(label)
            .into_iter()
            .map(|b| (b.state, b.weight))
            .collect();
        AtomicDist::new(atoms).expect("branch weights sum to one")
    }

    /// Labels at which branch weights can change. Weights are constant
    /// between consecutive entries.
    pub(crate) fn weight_breaks(&self) -> Vec<f64> {
        let d = self.label_domain();
        match &self.kind {
            ParametricKind::UniqueImpl { refinement, .. } => refinement.partition().to_vec(),
            _ => vec![d.lo(), d.hi()],
        }
    }

    /// Labels at which a branch location can jump or change slope, merged
    /// with the weight breaks. Between consecutive entries every posterior
    /// varies continuously.
    pub fn label_breakpoints(&self) -> Vec<f64> {
        let q = self.q;
        let d = self.label_domain();
        let mut out = self.weight_breaks();
        let levels = self.prior.levels();
        match &self.kind {
            ParametricKind::Matching | ParametricKind::Nam => {
                for &v in &levels {
                    if v <= q {
                        out.push(v);
                    }
                    if v >= q {
                        let w = match self.kind {
                            ParametricKind::Matching => q * (v - q) / (1.0 - q),
                            _ => q * (1.0 - v) / (1.0 - q),
                        };
                        out.push(w);
                    }
                }
            }
            ParametricKind::UniqueImpl { refinement, .. } => {
                let h_n = refinement.h_n();
                out.extend(self.prior.knots().iter().map(|k| k.x));
                out.extend(h_n.knots().iter().map(|k| k.x));
                for &v in &levels {
                    if v <= q {
                        out.push(h_n.gen_inverse(v / q));
                    }
                    if v >= q {
                        out.push(h_n.gen_inverse((v - q) / (1.0 - q)));
                    }
                }
            }
        }
        let mut out: Vec<f64> = out.into_iter().map(|l| d.clamp(l)).collect();
        sort_dedup(&mut out);
        out
    }
}

/// One posterior of a finite experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteEntry {
    pub label: f64,
    pub weight: f64,
    pub posterior: AtomicDist,
}

/// A finite list of labeled posteriors.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteExperiment {
    prior: Cdf,
    entries: Vec<FiniteEntry>,
}

impl FiniteExperiment {
    /// Checks the weights. Bayes plausibility is not enforced here; measure
    /// it with [`bayes_residual`].
    pub fn new(prior: Cdf, entries: Vec<FiniteEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invariant("a finite experiment needs an entry"));
        }
        if entries
            .iter()
            .any(|e| e.weight.is_nan() || e.weight <= 0.0 || !e.label.is_finite())
        {
            return Err(Error::invariant("entry weights must be positive"));
        }
        let total: f64 = entries.iter().map(|e| e.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invariant(format!(
                "entry weights sum to {total}, expected 1"
            )));
        }
        let d = prior.domain();
        if entries
            .iter()
            .flat_map(|e| e.posterior.support())
            .any(|x| !d.contains(x))
        {
            return Err(Error::invariant(
                "posterior support leaves the prior's domain",
            ));
        }
        Ok(FiniteExperiment { prior, entries })
    }

    /// Full revelation of an atomic prior: one degenerate posterior per atom,
    /// labeled by the atom.
    pub fn full_revelation(prior: &Cdf) -> Result<Self> {
        let atoms = prior.to_atomic()?;
        let entries = atoms
            .atoms()
            .iter()
            .map(|&(x, m)| FiniteEntry {
                label: x,
                weight: m,
                posterior: AtomicDist::dirac(x),
            })
            .collect();
        FiniteExperiment::new(prior.clone(), entries)
    }

    pub fn prior(&self) -> &Cdf {
        &self.prior
    }

    pub fn entries(&self) -> &[FiniteEntry] {
        &self.entries
    }

    /// The average posterior `Σ wᵢ Gᵢ`.
    pub fn mean_posterior(&self) -> Result<Cdf> {
        let atoms = self
            .entries
            .iter()
            .flat_map(|e| {
                e.posterior
                    .atoms()
                    .iter()
                    .map(move |&(x, m)| (x, m * e.weight))
            })
            .collect();
        AtomicDist::new(atoms)?.to_cdf(self.prior.domain())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Experiment {
    Parametric(ParametricExperiment),
    Finite(FiniteExperiment),
}

impl Experiment {
    pub fn prior(&self) -> &Cdf {
        match self {
            Experiment::Parametric(p) => p.prior(),
            Experiment::Finite(f) => f.prior(),
        }
    }
}

impl From<ParametricExperiment> for Experiment {
    fn from(p: ParametricExperiment) -> Self {
        Experiment::Parametric(p)
    }
}

impl From<FiniteExperiment> for Experiment {
    fn from(f: FiniteExperiment) -> Self {
        Experiment::Finite(f)
    }
}

/// Cumulative weighted label measure of one branch:
/// `W(ℓ) = ∫_{lo}^{ℓ} w(λ) dM(λ)` with `w` constant between weight breaks.
struct BranchMeasure<'a> {
    law: &'a Cdf,
    breaks: Vec<f64>,
    weights: Vec<f64>,
    cum: Vec<f64>,
}

impl<'a> BranchMeasure<'a> {
    fn new(exp: &'a ParametricExperiment, j: usize) -> Self {
        let law = exp.label_law();
        let breaks = exp.weight_breaks();
        let mut weights = Vec::with_capacity(breaks.len());
        let mut cum = Vec::with_capacity(breaks.len());
        let mut acc = Neumaier::default();
        for (i, &b) in breaks.iter().enumerate() {
            cum.push(acc.value());
            let w = match breaks.get(i + 1) {
                Some(&next) => exp.branch_weight(j, 0.5 * (b + next)),
                None => 0.0,
            };
            weights.push(w);
            if let Some(&next) = breaks.get(i + 1) {
                acc.add(w * (law.at(next) - law.at(b)));
            }
        }
        BranchMeasure {
            law,
            breaks,
            weights,
            cum,
        }
    }

    fn upto(&self, label: f64) -> f64 {
        let i = self.breaks.partition_point(|&b| b <= label).max(1) - 1;
        self.cum[i] + self.weights[i] * (self.law.at(label) - self.law.at(self.breaks[i]))
    }

    fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }
}

/// Boundary of `{ℓ : state(ℓ) ≤ θ}` for a monotone branch: the supremum for
/// increasing branches, the infimum for decreasing ones.
fn branch_boundary(
    exp: &ParametricExperiment,
    j: usize,
    dir: Direction,
    theta: f64,
) -> Option<f64> {
    let d = exp.label_domain();
    let below = |l: f64| exp.branch_state(j, l) <= theta + TOL;
    let (mut lo, mut hi) = (d.lo(), d.hi());
    match dir {
        Direction::Increasing => {
            if !below(lo) {
                return None;
            }
            if below(hi) {
                return Some(hi);
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if below(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Some(lo)
        }
        Direction::Decreasing => {
            if !below(hi) {
                return None;
            }
            if below(lo) {
                return Some(lo);
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if below(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(hi)
        }
    }
}

/// `θ ↦ ∫ G(θ) dτ(G)` for a parametric experiment, evaluated at each state.
pub(crate) fn mean_posterior_at(exp: &ParametricExperiment, thetas: &[f64]) -> Vec<f64> {
    let measures: Vec<BranchMeasure> = (0..exp.directions().len())
        .map(|j| BranchMeasure::new(exp, j))
        .collect();
    thetas
        .iter()
        .map(|&theta| {
            exp.directions()
                .iter()
                .enumerate()
                .map(|(j, &dir)| {
                    let m = &measures[j];
                    match (branch_boundary(exp, j, dir, theta), dir) {
                        (None, _) => 0.0,
                        (Some(b), Direction::Increasing) => m.upto(b),
                        (Some(b), Direction::Decreasing) => m.total() - m.upto(b),
                    }
                })
                .sum()
        })
        .collect()
}

/// `max_θ |∫ G(θ) dτ(G) − F(θ)|` over `grid_size` evenly spaced states plus
/// the prior's knots.
pub fn bayes_residual(exp: &Experiment, grid_size: usize) -> Result<f64> {
    if grid_size < 2 {
        return Err(Error::precondition("bayes_residual needs grid_size ≥ 2"));
    }
    let prior = exp.prior();
    let mut thetas = prior.domain().grid(grid_size);
    thetas.extend(prior.knots().iter().map(|k| k.x));
    sort_dedup(&mut thetas);
    match exp {
        Experiment::Finite(f) => {
            let mean = f.mean_posterior()?;
            Ok(thetas
                .iter()
                .map(|&t| {
                    let r = (mean.at(t) - prior.at(t)).abs();
                    let l = (mean.before(t) - prior.before(t)).abs();
                    r.max(l)
                })
                .fold(0.0, f64::max))
        }
        Experiment::Parametric(p) => {
            let mean = mean_posterior_at(p, &thetas);
            Ok(thetas
                .iter()
                .zip(mean)
                .map(|(&t, m)| (m - prior.at(t)).abs())
                .fold(0.0, f64::max))
        }
    }
}

/// A finite experiment obtained from a parametric one.
#[derive(Clone, Debug, PartialEq)]
pub struct Discretized {
    pub experiment: FiniteExperiment,
    /// True when every label cell carries a single posterior, so the
    /// discretization is the same experiment.
    pub exact: bool,
    /// Bayes residual of the finite experiment.
    pub residual: f64,
}

/// Cuts the label range into cells and keeps one posterior per cell (the
/// one at the cell midpoint) with the cell's label mass. For matching and
/// NAM experiments on an atomic prior the cells are exactly the label ranges
/// on which the posterior is constant and `cells` is ignored.
pub fn discretize_experiment(exp: &ParametricExperiment, cells: usize) -> Result<Discretized> {
    if cells == 0 {
        return Err(Error::precondition("discretize_experiment needs cells ≥ 1"));
    }
    let d = exp.label_domain();
    let exact =
        exp.prior.is_atomic() && matches!(exp.kind, ParametricKind::Matching | ParametricKind::Nam);
    let mut breaks = exp.label_breakpoints();
    if !exact {
        breaks.extend(d.grid(cells + 1));
        sort_dedup(&mut breaks);
    }
    let law = exp.label_law();
    let mut entries = Vec::with_capacity(breaks.len());
    for w in breaks.windows(2) {
        let weight = law.at(w[1]) - law.at(w[0]);
        if weight <= TOL {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        entries.push(FiniteEntry {
            label: mid,
            weight,
            posterior: exp.posterior_at(mid),
        });
    }
    let total: f64 = entries.iter().map(|e| e.weight).sum();
    for e in entries.iter_mut() {
        e.weight /= total;
    }
    let experiment = FiniteExperiment::new(exp.prior.clone(), entries)?;
    let residual = bayes_residual(&Experiment::Finite(experiment.clone()), 1001)?;
    Ok(Discretized {
        experiment,
        exact,
        residual,
    })
}
