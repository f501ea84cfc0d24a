//! Selections of one quantile per posterior, and the distributions they induce.
//!
//! Selections are indexed by the experiment's label rather than by the
//! posterior itself: on atomic priors two labels can carry the same
//! posterior and still need different quantiles.

use std::fmt;
use std::sync::Arc;

use crate::bounds::{is_implementable, Implementability};
use crate::dist::{sort_dedup, AtomicDist, Cdf, MeasureBuilder, Side};
use crate::error::{Error, Result};
use crate::experiment::{Experiment, ParametricExperiment};
use crate::TOL;

/// Label grid used when a selection has no exact pushforward.
pub const DEFAULT_PUSHFORWARD_CELLS: usize = 1 << 14;

type SelectFn = dyn Fn(f64, &AtomicDist) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum Selection {
    /// Piecewise-linear graph `label ↦ state` through sorted points.
    /// Repeated labels mark a jump; at a jump the first point is selected,
    /// so the selection is left-continuous. Constant beyond the ends.
    Path(Vec<(f64, f64)>),
    Constant(f64),
    /// One state per entry of a finite experiment.
    PerEntry(Vec<f64>),
    /// The smallest q-quantile of each posterior.
    LowestQuantile {
        q: f64,
    },
    /// The largest q-quantile of each posterior.
    HighestQuantile {
        q: f64,
    },
    /// Any rule of the label and its posterior.
    Function(Arc<SelectFn>),
}

impl fmt::Debug for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selection::Path(p) => f.debug_tuple("Path").field(p).finish(),
            Selection::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Selection::PerEntry(v) => f.debug_tuple("PerEntry").field(v).finish(),
            Selection::LowestQuantile { q } => {
                f.debug_struct("LowestQuantile").field("q", q).finish()
            }
            Selection::HighestQuantile { q } => {
                f.debug_struct("HighestQuantile").field("q", q).finish()
            }
            Selection::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl Selection {
    pub fn path(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invariant("a selection path needs a point"));
        }
        if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(Error::invariant("selection path points must be finite"));
        }
        if points.windows(2).any(|w| w[1].0 < w[0].0 - TOL) {
            return Err(Error::invariant(
                "selection path labels must be nondecreasing",
            ));
        }
        Ok(Selection::Path(points))
    }

    /// `χ(label) = label`, for experiments labeled by the state.
    pub fn identity(exp: &ParametricExperiment) -> Self {
        let d = exp.label_domain();
        Selection::Path(vec![(d.lo(), d.lo()), (d.hi(), d.hi())])
    }

    pub fn function(f: impl Fn(f64, &AtomicDist) -> f64 + Send + Sync + 'static) -> Self {
        Selection::Function(Arc::new(f))
    }

    /// The state selected at `label` of a parametric experiment.
    pub fn select_label(&self, exp: &ParametricExperiment, label: f64) -> Result<f64> {
        Ok(match self {
            Selection::Path(points) => path_value(points, label, Side::Left),
            Selection::Constant(c) => *c,
            Selection::PerEntry(_) => {
                return Err(Error::precondition(
                    "per-entry selections apply to finite experiments only",
                ))
            }
            Selection::LowestQuantile { q } => exp.posterior_at(label).quantile_interval(*q).lo,
            Selection::HighestQuantile { q } => exp.posterior_at(label).quantile_interval(*q).hi,
            Selection::Function(f) => f(label, &exp.posterior_at(label)),
        })
    }

    /// The state selected for entry `index` (with `label` and `posterior`)
    /// of a finite experiment.
    pub fn select_entry(&self, index: usize, label: f64, posterior: &AtomicDist) -> Result<f64> {
        Ok(match self {
            Selection::Path(points) => path_value(points, label, Side::Left),
            Selection::Constant(c) => *c,
            Selection::PerEntry(states) => *states.get(index).ok_or_else(|| {
                Error::precondition(format!("no selected state for entry {index}"))
            })?,
            Selection::LowestQuantile { q } => posterior.quantile_interval(*q).lo,
            Selection::HighestQuantile { q } => posterior.quantile_interval(*q).hi,
            Selection::Function(f) => f(label, posterior),
        })
    }
}

/// Value of a path at `label`. At a jump `Left` gives the first point and
/// `Right` the last one.
fn path_value(points: &[(f64, f64)], label: f64, side: Side) -> f64 {
    let first = points.partition_point(|p| p.0 < label - TOL);
    if first == points.len() {
        return points[points.len() - 1].1;
    }
    if (points[first].0 - label).abs() <= TOL {
        return match side {
            Side::Left => points[first].1,
            Side::Right => {
                let last = points.partition_point(|p| p.0 <= label + TOL);
                points[last - 1].1
            }
        };
    }
    if first == 0 {
        return points[0].1;
    }
    let (a, b) = (points[first - 1], points[first]);
    let t = (label - a.0) / (b.0 - a.0);
    a.1 + t * (b.1 - a.1)
}

/// `χ(G_ω) = H⁻¹(ω/q)` on the matching experiment, as a path.
pub fn matching_selection(h: &Cdf, prior: &Cdf, q: f64) -> Result<Selection> {
    if let Implementability::No { x, side, gap, .. } = is_implementable(h, prior, q)? {
        return Err(Error::precondition(format!(
            "target is not implementable: violates the {side:?} bound at x = {x} by {gap}"
        )));
    }
    let mut points = Vec::with_capacity(2 * h.knots().len());
    for k in h.knots() {
        points.push((q * k.left, k.x));
        if k.jump() > 0.0 {
            points.push((q * k.right, k.x));
        }
    }
    Selection::path(points)
}

/// The induced distribution of selected states, with the label resolution
/// used when it had to be approximated on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Pushforward {
    pub dist: Cdf,
    pub resolution: Option<f64>,
}

/// Distribution of `χ(G)` under the experiment.
///
/// Exact for finite experiments, constant selections, and path selections
/// on parametric experiments (each linear piece of the path carries label
/// mass to a uniform piece or an atom, whatever the path's direction).
/// Other selections on parametric experiments are evaluated on a grid of
/// [`DEFAULT_PUSHFORWARD_CELLS`] label cells.
pub fn pushforward(exp: &Experiment, sel: &Selection) -> Result<Pushforward> {
    pushforward_with(exp, sel, DEFAULT_PUSHFORWARD_CELLS)
}

pub fn pushforward_with(exp: &Experiment, sel: &Selection, cells: usize) -> Result<Pushforward> {
    let domain = exp.prior().domain();
    match exp {
        Experiment::Finite(f) => {
            let mut atoms = Vec::with_capacity(f.entries().len());
            for (i, e) in f.entries().iter().enumerate() {
                atoms.push((sel.select_entry(i, e.label, &e.posterior)?, e.weight));
            }
            Ok(Pushforward {
                dist: AtomicDist::new(atoms)?.to_cdf(domain)?,
                resolution: None,
            })
        }
        Experiment::Parametric(p) => match sel {
            Selection::Constant(c) => Ok(Pushforward {
                dist: Cdf::dirac(domain, *c)?,
                resolution: None,
            }),
            Selection::Path(points) => Ok(Pushforward {
                dist: path_pushforward(p, points)?,
                resolution: None,
            }),
            _ => grid_pushforward(p, sel, cells),
        },
    }
}

fn path_pushforward(exp: &ParametricExperiment, points: &[(f64, f64)]) -> Result<Cdf> {
    let law = exp.label_law();
    let d = exp.label_domain();
    let mut labels: Vec<f64> = law.knots().iter().map(|k| k.x).collect();
    labels.extend(points.iter().map(|p| d.clamp(p.0)));
    sort_dedup(&mut labels);
    let mut m = MeasureBuilder::new();
    for k in law.knots() {
        if k.jump() > 0.0 {
            m.atom(path_value(points, k.x, Side::Left), k.jump());
        }
    }
    for w in labels.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mass = law.before(b) - law.at(a);
        let (sa, sb) = (
            path_value(points, a, Side::Right),
            path_value(points, b, Side::Left),
        );
        m.uniform(sa, sb, mass);
    }
    m.build(exp.prior().domain())
}

fn grid_pushforward(
    exp: &ParametricExperiment,
    sel: &Selection,
    cells: usize,
) -> Result<Pushforward> {
    if cells == 0 {
        return Err(Error::precondition(
            "pushforward grid needs at least one cell",
        ));
    }
    let law = exp.label_law();
    let d = exp.label_domain();
    let mut labels = exp.label_breakpoints();
    labels.extend(d.grid(cells + 1));
    sort_dedup(&mut labels);
    let mut atoms = Vec::with_capacity(labels.len());
    let mut resolution: f64 = 0.0;
    for w in labels.windows(2) {
        let mass = law.at(w[1]) - law.at(w[0]);
        resolution = resolution.max(w[1] - w[0]);
        if mass > 0.0 {
            atoms.push((sel.select_label(exp, 0.5 * (w[0] + w[1]))?, mass));
        }
    }
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    for a in atoms.iter_mut() {
        a.1 /= total;
    }
    Ok(Pushforward {
        dist: AtomicDist::new(atoms)?.to_cdf(exp.prior().domain())?,
        resolution: Some(resolution),
    })
}

/// First label of `labels` at which the selection leaves the posterior's
/// q-quantile interval, if any.
pub fn selection_violation(
    exp: &ParametricExperiment,
    sel: &Selection,
    labels: &[f64],
) -> Result<Option<f64>> {
    let q = exp.q();
    for &l in labels {
        let x = sel.select_label(exp, l)?;
        if !exp.posterior_at(l).quantile_interval(q).contains(x, 1e-9) {
            return Ok(Some(l));
        }
    }
    Ok(None)
}
