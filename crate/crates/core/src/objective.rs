//! Continuous objectives over states, and their exact integrals and argmaxes.

use std::cmp::Ordering;

use crate::dist::{Cdf, Domain, Neumaier};
use crate::error::{Error, Result};
use crate::TOL;

/// Default number of segments used when sampling an arbitrary function.
pub const DEFAULT_SAMPLING_SEGMENTS: usize = 1 << 12;

/// A continuous objective `V`.
///
/// Every variant is linear or convex between consecutive
/// [`breakpoints`](Objective::breakpoints), which is what makes argmaxes and
/// integrals exact.
#[derive(Clone, Debug, PartialEq)]
pub enum Objective {
    /// Linear interpolation through sorted `(x, V(x))` points, constant
    /// beyond the first and last point.
    PiecewiseLinear(Vec<(f64, f64)>),
    /// `V(x) = (x − center)²`.
    Quadratic { center: f64 },
    /// `V(x) = −|x − peak|`.
    Tent { peak: f64 },
}

impl Objective {
    pub fn piecewise_linear(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invariant("piecewise-linear objective needs a point"));
        }
        if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(Error::invariant("objective points must be finite"));
        }
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        if points.windows(2).any(|w| w[1].0 - w[0].0 <= TOL) {
            return Err(Error::invariant(
                "objective points must have distinct states (V is continuous)",
            ));
        }
        Ok(Objective::PiecewiseLinear(points))
    }

    /// `V(x) = intercept + slope · x` on the domain.
    pub fn affine(domain: Domain, intercept: f64, slope: f64) -> Self {
        Objective::PiecewiseLinear(vec![
            (domain.lo(), intercept + slope * domain.lo()),
            (domain.hi(), intercept + slope * domain.hi()),
        ])
    }

    pub fn quadratic(center: f64) -> Self {
        Objective::Quadratic { center }
    }

    pub fn tent(peak: f64) -> Self {
        Objective::Tent { peak }
    }

    /// Samples `f` at `segments + 1` evenly spaced states and interpolates.
    pub fn sampled(domain: Domain, segments: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let points = domain
            .grid(segments.max(1) + 1)
            .into_iter()
            .map(|x| (x, f(x)))
            .collect();
        Objective::piecewise_linear(points)
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Objective::PiecewiseLinear(points) => {
                let i = points.partition_point(|p| p.0 <= x);
                if i == 0 {
                    points[0].1
                } else if i == points.len() {
                    points[points.len() - 1].1
                } else {
                    let (a, b) = (points[i - 1], points[i]);
                    let t = (x - a.0) / (b.0 - a.0);
                    a.1 + t * (b.1 - a.1)
                }
            }
            Objective::Quadratic { center } => (x - center) * (x - center),
            Objective::Tent { peak } => -(x - peak).abs(),
        }
    }

    /// States where `V` may change slope.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Objective::PiecewiseLinear(points) => points.iter().map(|p| p.0).collect(),
            Objective::Quadratic { .. } => Vec::new(),
            Objective::Tent { peak } => vec![*peak],
        }
    }

    /// Breakpoints strictly inside `(lo, hi)`.
    pub(crate) fn breakpoints_between(&self, lo: f64, hi: f64) -> Vec<f64> {
        match self {
            Objective::PiecewiseLinear(points) => {
                let start = points.partition_point(|p| p.0 <= lo);
                let end = points.partition_point(|p| p.0 < hi);
                points[start..end.max(start)].iter().map(|p| p.0).collect()
            }
            Objective::Quadratic { .. } => Vec::new(),
            Objective::Tent { peak } => {
                if *peak > lo && *peak < hi {
                    vec![*peak]
                } else {
                    Vec::new()
                }
            }
        }
    }

    /// `∫_a^b V(x) dx`, exact.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match self {
            Objective::Quadratic { center } => {
                let (u, v) = (a - center, b - center);
                (v * v * v - u * u * u) / 3.0
            }
            _ => {
                let mut xs = vec![a];
                xs.extend(self.breakpoints_between(a, b));
                xs.push(b);
                let mut acc = Neumaier::default();
                for w in xs.windows(2) {
                    acc.add(0.5 * (self.value(w[0]) + self.value(w[1])) * (w[1] - w[0]));
                }
                acc.value()
            }
        }
    }

    /// False when `V` rises and later falls on the domain, i.e. it has an
    /// interior strict local maximum and cannot be quasi-convex.
    pub fn is_quasi_convex_on(&self, domain: Domain) -> bool {
        let mut xs = vec![domain.lo()];
        xs.extend(self.breakpoints_between(domain.lo(), domain.hi()));
        if let Objective::Quadratic { center } = self {
            if *center > domain.lo() && *center < domain.hi() {
                xs.push(*center);
            }
        }
        xs.push(domain.hi());
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        let mut rising = false;
        for w in xs.windows(2) {
            let delta = self.value(w[1]) - self.value(w[0]);
            if delta > TOL {
                rising = true;
            } else if delta < -TOL && rising {
                return false;
            }
        }
        true
    }
}

/// The argmax set of `V` on an interval, summarized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArgmaxInterval {
    pub min_argmax: f64,
    pub max_argmax: f64,
    pub max_value: f64,
}

pub(crate) fn value_tol(v: f64) -> f64 {
    TOL * (1.0 + v.abs())
}

/// Exact maximization of `V` on `[lo, hi]`. The candidates are the endpoints
/// and interior breakpoints, since `V` is linear or convex in between.
pub fn argmax_interval(v: &Objective, lo: f64, hi: f64) -> ArgmaxInterval {
    let hi = hi.max(lo);
    let mut candidates = vec![lo];
    candidates.extend(v.breakpoints_between(lo, hi));
    candidates.push(hi);
    let values: Vec<f64> = candidates.iter().map(|&x| v.value(x)).collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = value_tol(best);
    let mut ties = candidates
        .iter()
        .zip(&values)
        .filter(|(_, &val)| val >= best - tol)
        .map(|(&x, _)| x);
    let first = ties.next().unwrap_or(lo);
    let last = ties.next_back().unwrap_or(first);
    ArgmaxInterval {
        min_argmax: first,
        max_argmax: last,
        max_value: best,
    }
}

/// `∫ V dD`: atom contributions plus exact integrals over the linear
/// segments of `D`.
pub fn stieltjes_integral(v: &Objective, d: &Cdf) -> f64 {
    let mut acc = Neumaier::default();
    let knots = d.knots();
    for (i, k) in knots.iter().enumerate() {
        if k.jump() > 0.0 {
            acc.add(v.value(k.x) * k.jump());
        }
        if let Some(next) = knots.get(i + 1) {
            let rise = next.left - k.right;
            if rise > 0.0 {
                acc.add(rise / (next.x - k.x) * v.integral(k.x, next.x));
            }
        }
    }
    acc.value()
}
