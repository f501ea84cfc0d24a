//! Unique implementation: perturbing the matching experiment so that every
//! posterior has a single q-quantile.
//!
//! A target `H` is first replaced by its dyadic refinement `H_n`, which
//! agrees with `H` on the grid `θ̲ + (θ̄ − θ̲)i/2ⁿ` and is affine in `F` on
//! each cell. The perturbed experiment is labeled by the state `x`, drawn
//! from `(1 − e)H_n + eF`, and the posterior at `x` is
//!
//! `Gˣ = [(1 − e)h_n(x)(q·δ_{F⁻¹(qH_n(x))} + (1 − q)·δ_{F⁻¹(q + (1 − q)H_n(x))}) + e·δ_x] / ((1 − e)h_n(x) + e)`
//!
//! where `h_n = ΔH/ΔF` on the cell containing `x`.

use crate::bounds::{check_q, is_implementable, Implementability};
use crate::dist::{sort_dedup, Cdf, Knot, QuantileInterval};
use crate::error::{Error, Result};
use crate::experiment::{Experiment, ParametricExperiment, ParametricKind};

/// Largest supported refinement level.
pub const MAX_LEVEL: u32 = 24;

#[derive(Clone, Debug, PartialEq)]
pub struct DyadicRefinement {
    n: u32,
    partition: Vec<f64>,
    h_n: Cdf,
    densities: Vec<f64>,
}

impl DyadicRefinement {
    pub fn level(&self) -> u32 {
        self.n
    }

    /// `θ_{0,n} < … < θ_{2ⁿ,n}`.
    pub fn partition(&self) -> &[f64] {
        &self.partition
    }

    pub fn h_n(&self) -> &Cdf {
        &self.h_n
    }

    /// `h_n` on each cell.
    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    /// `h_n(x)`; partition points belong to the cell on their right.
    pub fn density_at(&self, x: f64) -> f64 {
        let cells = self.densities.len();
        let (lo, hi) = (self.partition[0], self.partition[cells]);
        let i = ((x - lo) / (hi - lo) * cells as f64).floor();
        let i = (i.max(0.0) as usize).min(cells - 1);
        self.densities[i]
    }
}

/// `H_n(x) = H(θ_{i−1}) + (H(θ_i) − H(θ_{i−1}))·(F(x) − F(θ_{i−1}))/(F(θ_i) − F(θ_{i−1}))`
/// on the `i`-th dyadic cell.
pub fn dyadic_refine(h: &Cdf, prior: &Cdf, n: u32) -> Result<DyadicRefinement> {
    if n > MAX_LEVEL {
        return Err(Error::Resource(format!(
            "refinement level {n} exceeds the supported maximum {MAX_LEVEL}"
        )));
    }
    if !prior.is_strictly_increasing_continuous() {
        return Err(Error::precondition(
            "dyadic refinement needs a prior with positive density (no atoms or flat parts)",
        ));
    }
    let d = prior.domain();
    if !h.domain().same_as(&d) {
        return Err(Error::invariant("target and prior must share a domain"));
    }
    let cells = 1usize << n;
    let partition: Vec<f64> = (0..=cells)
        .map(|i| {
            if i == cells {
                d.hi()
            } else {
                d.lo() + d.width() * i as f64 / cells as f64
            }
        })
        .collect();
    let hv: Vec<f64> = partition.iter().map(|&x| h.at(x)).collect();
    let fv: Vec<f64> = partition.iter().map(|&x| prior.at(x)).collect();
    let densities: Vec<f64> = (0..cells)
        .map(|i| (hv[i + 1] - hv[i]) / (fv[i + 1] - fv[i]))
        .collect();

    let mut xs = partition.clone();
    xs.extend(prior.knots().iter().map(|k| k.x));
    sort_dedup(&mut xs);
    let mut knots = Vec::with_capacity(xs.len());
    let mut cell = 0usize;
    for (j, &x) in xs.iter().enumerate() {
        while cell + 1 < cells && x >= partition[cell + 1] {
            cell += 1;
        }
        let value = if x >= partition[cell + 1] {
            hv[cell + 1]
        } else {
            hv[cell] + densities[cell] * (prior.at(x) - fv[cell])
        };
        let left = if j == 0 { 0.0 } else { value };
        knots.push(Knot::new(x, left, value));
    }
    Ok(DyadicRefinement {
        n,
        partition,
        h_n: Cdf::new(d, knots)?,
        densities,
    })
}

/// The perturbed matching experiment that uniquely implements
/// `(1 − e)H_n + eF`.
pub fn unique_experiment(
    h: &Cdf,
    prior: &Cdf,
    q: f64,
    e: f64,
    n: u32,
) -> Result<ParametricExperiment> {
    check_q(q)?;
    if !(e > 0.0 && e <= 1.0) {
        return Err(Error::precondition(format!(
            "perturbation weight e = {e} must lie in (0, 1]"
        )));
    }
    if let Implementability::No { x, side, gap, .. } = is_implementable(h, prior, q)? {
        return Err(Error::precondition(format!(
            "target is not implementable: violates the {side:?} bound at x = {x} by {gap}"
        )));
    }
    let refinement = dyadic_refine(h, prior, n)?;
    if let Implementability::No { x, side, gap, .. } = is_implementable(refinement.h_n(), prior, q)?
    {
        return Err(Error::invariant(format!(
            "dyadic refinement left the implementable set: {side:?} bound at x = {x} by {gap}"
        )));
    }
    ParametricExperiment::new(
        prior.clone(),
        q,
        ParametricKind::UniqueImpl {
            refinement,
            e,
            target: h.clone(),
        },
    )
}

#[derive(Clone, Debug, PartialEq)]
pub enum UniqueVerdict {
    Unique {
        checked: usize,
    },
    NotUnique {
        label: f64,
        interval: QuantileInterval,
    },
}

impl UniqueVerdict {
    pub fn is_unique(&self) -> bool {
        matches!(self, UniqueVerdict::Unique { .. })
    }
}

/// Checks that the sampled posteriors all have a single q-quantile. Finite
/// experiments are enumerated; parametric ones are sampled at their label
/// breakpoints, the midpoints between them, and `grid` evenly spaced labels.
pub fn verify_unique(exp: &Experiment, q: f64, grid: usize) -> Result<UniqueVerdict> {
    check_q(q)?;
    const WIDTH: f64 = 1e-12;
    match exp {
        Experiment::Finite(f) => {
            for e in f.entries() {
                let iv = e.posterior.quantile_interval(q);
                if iv.width() >= WIDTH {
                    return Ok(UniqueVerdict::NotUnique {
                        label: e.label,
                        interval: iv,
                    });
                }
            }
            Ok(UniqueVerdict::Unique {
                checked: f.entries().len(),
            })
        }
        Experiment::Parametric(p) => {
            let breaks = p.label_breakpoints();
            let mut labels = breaks.clone();
            labels.extend(breaks.windows(2).map(|w| 0.5 * (w[0] + w[1])));
            if grid >= 2 {
                labels.extend(p.label_domain().grid(grid));
            }
            sort_dedup(&mut labels);
            for &l in &labels {
                let iv = p.posterior_at(l).quantile_interval(q);
                if iv.width() >= WIDTH {
                    return Ok(UniqueVerdict::NotUnique {
                        label: l,
                        interval: iv,
                    });
                }
            }
            Ok(UniqueVerdict::Unique {
                checked: labels.len(),
            })
        }
    }
}
