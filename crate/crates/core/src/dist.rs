//! Mixed discrete-continuous distributions on a compact interval.
//!
//! A [`Cdf`] is stored as a sorted list of knots. Each knot carries the left
//! limit and the value of the distribution function at that state; between
//! consecutive knots the function is linear. Atoms are knots whose right value
//! exceeds the left value. The class is closed under every operation in this
//! crate, so nothing here needs quadrature.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::TOL;

/// The state interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    lo: f64,
    hi: f64,
}

impl Domain {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::invariant(format!(
                "domain requires finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Domain { lo, hi })
    }

    /// The unit interval.
    pub fn unit() -> Self {
        Domain { lo: 0.0, hi: 1.0 }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo - TOL && x <= self.hi + TOL
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    pub(crate) fn same_as(&self, other: &Domain) -> bool {
        (self.lo - other.lo).abs() <= TOL && (self.hi - other.hi).abs() <= TOL
    }

    /// `count` evenly spaced states including both endpoints.
    pub fn grid(&self, count: usize) -> Vec<f64> {
        let count = count.max(2);
        (0..count)
            .map(|i| {
                if i + 1 == count {
                    self.hi
                } else {
                    self.lo + self.width() * i as f64 / (count - 1) as f64
                }
            })
            .collect()
    }
}

/// One breakpoint of a [`Cdf`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Knot {
    pub x: f64,
    /// Left limit `D(x⁻)`.
    pub left: f64,
    /// Value `D(x)`.
    pub right: f64,
}

impl Knot {
    pub fn new(x: f64, left: f64, right: f64) -> Self {
        Knot { x, left, right }
    }

    /// A knot without an atom.
    pub fn continuous(x: f64, value: f64) -> Self {
        Knot {
            x,
            left: value,
            right: value,
        }
    }

    pub fn jump(&self) -> f64 {
        self.right - self.left
    }
}

/// Which one-sided value to read at a state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// The left limit `D(x⁻)`.
    Left,
    /// The value `D(x)`.
    Right,
}

/// A closed interval of states, e.g. the set of q-quantiles of a posterior.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantileInterval {
    pub lo: f64,
    pub hi: f64,
}

impl QuantileInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }
}

/// A cumulative distribution function in the piecewise-linear-with-atoms class.
///
/// Invariants, enforced by [`Cdf::new`]:
/// - knots strictly increasing, the first at `domain.lo` and the last at `domain.hi`;
/// - `0 = left_0 ≤ right_0 ≤ left_1 ≤ … ≤ right_last = 1`;
/// - no two knots closer than [`TOL`], no redundant interior knots.
#[derive(Clone, Debug, PartialEq)]
pub struct Cdf {
    domain: Domain,
    knots: Vec<Knot>,
}

impl Cdf {
    /// Builds a normalized CDF from raw knots.
    ///
    /// Knots are sorted and knots closer than [`TOL`] are merged. Before the
    /// first knot the function is constant at that knot's left value, so a
    /// first knot above `lo` with positive left value puts an atom at `lo`.
    pub fn new(domain: Domain, knots: Vec<Knot>) -> Result<Self> {
        let mut raw = Vec::with_capacity(knots.len() + 2);
        for k in knots {
            if !(k.x.is_finite() && k.left.is_finite() && k.right.is_finite()) {
                return Err(Error::invariant(format!("non-finite knot {k:?}")));
            }
            if !domain.contains(k.x) {
                return Err(Error::Domain {
                    x: k.x,
                    lo: domain.lo,
                    hi: domain.hi,
                });
            }
            raw.push(Knot {
                x: domain.clamp(k.x),
                ..k
            });
        }
        raw.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap_or(Ordering::Equal));

        let mut merged: Vec<Knot> = Vec::with_capacity(raw.len() + 2);
        for k in raw {
            match merged.last_mut() {
                Some(last) if k.x - last.x <= TOL => {
                    // keep endpoint positions exact
                    if k.x == domain.hi {
                        last.x = domain.hi;
                    }
                    last.right = k.right;
                }
                _ => merged.push(k),
            }
        }
        if merged.is_empty() {
            return Err(Error::invariant("a CDF needs at least one knot"));
        }
        if merged[0].x > domain.lo {
            let first = merged[0].left;
            merged.insert(0, Knot::new(domain.lo, 0.0, first));
        }
        merged[0].left = 0.0;
        let last = *merged.last().unwrap();
        if last.x < domain.hi {
            merged.push(Knot::continuous(domain.hi, last.right));
        }

        let mut prev = 0.0_f64;
        for k in merged.iter_mut() {
            for v in [&mut k.left, &mut k.right] {
                if *v < prev - TOL || *v < -TOL || *v > 1.0 + TOL {
                    return Err(Error::invariant(format!(
                        "CDF values must be nondecreasing within [0, 1]; got {v} after {prev} at x = {}",
                        k.x
                    )));
                }
                *v = v.clamp(prev, 1.0);
                prev = *v;
            }
            if k.jump() <= TOL {
                k.left = k.right;
            }
        }
        let end = merged.last_mut().unwrap();
        if (end.right - 1.0).abs() > TOL {
            return Err(Error::invariant(format!(
                "CDF must reach 1 at the top of the domain, got {}",
                end.right
            )));
        }
        end.right = 1.0;
        if end.left > 1.0 - TOL {
            end.left = 1.0;
        }

        Ok(Cdf {
            domain,
            knots: simplify(merged),
        })
    }

    /// The uniform distribution on the domain.
    pub fn uniform(domain: Domain) -> Self {
        Cdf {
            domain,
            knots: vec![
                Knot::continuous(domain.lo, 0.0),
                Knot::continuous(domain.hi, 1.0),
            ],
        }
    }

    /// The degenerate distribution `δ_at`.
    pub fn dirac(domain: Domain, at: f64) -> Result<Self> {
        Cdf::new(domain, vec![Knot::new(at, 0.0, 1.0)])
    }

    /// A finite mixture of atoms `(state, mass)`.
    pub fn atoms(domain: Domain, atoms: &[(f64, f64)]) -> Result<Self> {
        AtomicDist::new(atoms.to_vec())?.to_cdf(domain)
    }

    /// Builds a CDF from the completed graph of its distribution function:
    /// a path of `(state, probability)` points nondecreasing in both
    /// coordinates. Repeated states are atoms, repeated probabilities are
    /// flats, anything else is linear.
    pub fn from_graph(domain: Domain, points: &[(f64, f64)]) -> Result<Self> {
        let mut knots: Vec<Knot> = Vec::with_capacity(points.len());
        for &(x, p) in points {
            match knots.last_mut() {
                Some(last) if (x - last.x).abs() <= TOL => last.right = p,
                Some(last) if x < last.x => {
                    return Err(Error::invariant(format!(
                        "graph path must be nondecreasing in state: {x} after {}",
                        last.x
                    )))
                }
                _ => knots.push(Knot::new(x, p, p)),
            }
        }
        Cdf::new(domain, knots)
    }

    /// Pieces `pieces[i]` on `[breaks[i], breaks[i + 1])`, the last piece
    /// running to the top of the domain. `breaks[0]` must be `domain.lo`.
    pub fn splice(domain: Domain, breaks: &[f64], pieces: &[Piece<'_>]) -> Result<Self> {
        if breaks.len() != pieces.len() || breaks.is_empty() {
            return Err(Error::invariant("splice needs one break per piece"));
        }
        let mut ends: Vec<f64> = breaks.iter().map(|&b| domain.clamp(b)).collect();
        ends.push(domain.hi);
        let mut knots = Vec::new();
        for (i, piece) in pieces.iter().enumerate() {
            let (a, b) = (ends[i], ends[i + 1]);
            if b < a - TOL {
                return Err(Error::invariant("splice breaks must be nondecreasing"));
            }
            if b - a <= TOL && i + 1 < pieces.len() {
                continue;
            }
            let left_at_a = match knots.last() {
                Some(&Knot { right, .. }) => right,
                None => 0.0,
            };
            knots.push(Knot::new(a, left_at_a, piece.at(a)));
            if let Piece::Curve(c) = piece {
                knots.extend(
                    c.knots
                        .iter()
                        .filter(|k| k.x > a + TOL && k.x < b - TOL)
                        .copied(),
                );
            }
            let last = i + 1 == pieces.len();
            if !last {
                // the next piece starts at b; record the limit from the left
                knots.push(Knot::continuous(b, piece.before(b)));
            } else if b > a + TOL {
                knots.push(Knot::new(b, piece.before(b), piece.at(b)));
            }
        }
        // collapse the (b, limit) / (b, next value) pairs produced above
        let mut out: Vec<Knot> = Vec::with_capacity(knots.len());
        for k in knots {
            match out.last_mut() {
                Some(last) if (k.x - last.x).abs() <= TOL => last.right = k.right,
                _ => out.push(k),
            }
        }
        Cdf::new(domain, out)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    /// Index of the knot within [`TOL`] of `x`, or `Err(i)` when `x` lies
    /// strictly inside the segment between knots `i` and `i + 1`.
    fn locate(&self, x: f64) -> std::result::Result<usize, usize> {
        let ks = &self.knots;
        let i = ks.partition_point(|k| k.x <= x);
        if i > 0 && x - ks[i - 1].x <= TOL {
            return Ok(i - 1);
        }
        if i < ks.len() && ks[i].x - x <= TOL {
            return Ok(i);
        }
        if i == 0 {
            Ok(0)
        } else if i == ks.len() {
            Ok(ks.len() - 1)
        } else {
            Err(i - 1)
        }
    }

    fn interpolate(&self, i: usize, x: f64) -> f64 {
        let (a, b) = (self.knots[i], self.knots[i + 1]);
        let t = (x - a.x) / (b.x - a.x);
        a.right + t * (b.left - a.right)
    }

    /// `D(x)` or `D(x⁻)`; errors outside the domain.
    pub fn eval(&self, x: f64, side: Side) -> Result<f64> {
        if !self.domain.contains(x) {
            return Err(Error::Domain {
                x,
                lo: self.domain.lo,
                hi: self.domain.hi,
            });
        }
        Ok(match side {
            Side::Right => self.at(x),
            Side::Left => self.before(x),
        })
    }

    /// `D(x)`, saturating outside the domain.
    pub fn at(&self, x: f64) -> f64 {
        if x < self.domain.lo - TOL {
            return 0.0;
        }
        match self.locate(x) {
            Ok(i) => self.knots[i].right,
            Err(i) => self.interpolate(i, x),
        }
    }

    /// `D(x⁻)`, saturating outside the domain.
    pub fn before(&self, x: f64) -> f64 {
        if x > self.domain.hi + TOL {
            return 1.0;
        }
        match self.locate(x) {
            Ok(i) => self.knots[i].left,
            Err(i) => self.interpolate(i, x),
        }
    }

    /// Smallest state `x` whose value passes `reached`. Values along the knot
    /// list are visited in the order `left_0, right_0, left_1, …`.
    fn first_reaching(&self, p: f64, reached: impl Fn(f64) -> bool) -> f64 {
        let ks = &self.knots;
        let value = |j: usize| {
            let k = &ks[j / 2];
            if j.is_multiple_of(2) {
                k.left
            } else {
                k.right
            }
        };
        let (mut lo, mut hi) = (0usize, 2 * ks.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if reached(value(mid)) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let j = lo;
        if j == 2 * ks.len() {
            return self.domain.hi;
        }
        let i = j / 2;
        if j % 2 == 1 {
            return ks[i].x;
        }
        if i == 0 {
            return self.domain.lo;
        }
        let (a, b) = (ks[i - 1], ks[i]);
        let rise = b.left - a.right;
        if rise <= 0.0 {
            return b.x;
        }
        let t = ((p - a.right) / rise).clamp(0.0, 1.0);
        (a.x + t * (b.x - a.x)).min(b.x)
    }

    /// Generalized inverse `inf{x : D(x) ≥ p}`; `p = 0` gives `domain.lo`.
    pub fn gen_inverse(&self, p: f64) -> f64 {
        self.first_reaching(p, |v| v >= p - TOL)
    }

    /// Upper inverse `sup{x : D(x⁻) ≤ p}`, the right edge of the `p`-level set.
    pub fn upper_inverse(&self, p: f64) -> f64 {
        self.first_reaching(p, |v| v > p + TOL)
    }

    /// The set of `q`-quantiles `{x : D(x⁻) ≤ q ≤ D(x)}`.
    pub fn quantile_interval(&self, q: f64) -> QuantileInterval {
        QuantileInterval {
            lo: self.gen_inverse(q),
            hi: self.upper_inverse(q),
        }
    }

    /// States where the distribution has an atom, with their masses.
    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.knots
            .iter()
            .filter(|k| k.jump() > TOL)
            .map(|k| (k.x, k.jump()))
    }

    /// True when every segment between knots is flat.
    pub fn is_atomic(&self) -> bool {
        self.knots.windows(2).all(|w| w[1].left - w[0].right <= TOL)
    }

    /// True when there are no atoms and every segment rises.
    pub fn is_strictly_increasing_continuous(&self) -> bool {
        self.knots.iter().all(|k| k.jump() <= TOL)
            && self.knots.windows(2).all(|w| w[1].left - w[0].right > TOL)
    }

    /// All distinct left/right values, i.e. the probability levels at which
    /// the inverse can have a kink or jump.
    pub fn levels(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.knots.iter().flat_map(|k| [k.left, k.right]).collect();
        sort_dedup(&mut v);
        v
    }

    /// Applies a transformation of probabilities `g`, assumed linear between
    /// consecutive `levels`, after inserting knots where the function crosses
    /// each level inside a segment.
    pub fn map_values(&self, levels: &[f64], g: impl Fn(f64) -> f64) -> Result<Cdf> {
        let mut knots: Vec<Knot> = Vec::with_capacity(self.knots.len() + levels.len());
        for (i, k) in self.knots.iter().enumerate() {
            if i > 0 {
                let a = self.knots[i - 1];
                let (v0, v1) = (a.right, k.left);
                for &lvl in levels {
                    if lvl > v0 + TOL && lvl < v1 - TOL {
                        let t = (lvl - v0) / (v1 - v0);
                        knots.push(Knot::continuous(a.x + t * (k.x - a.x), lvl));
                    }
                }
            }
            knots.push(*k);
        }
        knots.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap_or(Ordering::Equal));
        for k in knots.iter_mut() {
            k.left = g(k.left);
            k.right = g(k.right);
        }
        Cdf::new(self.domain, knots)
    }

    /// Converts to a finite atom list when the distribution is purely atomic.
    pub fn to_atomic(&self) -> Result<AtomicDist> {
        if !self.is_atomic() {
            return Err(Error::precondition(
                "distribution has a continuous part and is not atomic",
            ));
        }
        AtomicDist::new(self.jumps().collect())
    }

    /// Merges the knot positions of several CDFs on a shared domain.
    pub(crate) fn merged_states(cdfs: &[&Cdf]) -> Vec<f64> {
        let mut xs: Vec<f64> = cdfs
            .iter()
            .flat_map(|c| c.knots.iter().map(|k| k.x))
            .collect();
        sort_dedup(&mut xs);
        xs
    }
}

/// One piece of [`Cdf::splice`].
#[derive(Clone, Copy, Debug)]
pub enum Piece<'a> {
    Curve(&'a Cdf),
    Const(f64),
}

impl Piece<'_> {
    fn at(&self, x: f64) -> f64 {
        match self {
            Piece::Curve(c) => c.at(x),
            Piece::Const(v) => *v,
        }
    }

    fn before(&self, x: f64) -> f64 {
        match self {
            Piece::Curve(c) => c.before(x),
            Piece::Const(v) => *v,
        }
    }
}

/// Drops interior knots that carry no atom and lie on the line joining
/// their neighbours.
fn simplify(knots: Vec<Knot>) -> Vec<Knot> {
    if knots.len() <= 2 {
        return knots;
    }
    let mut out: Vec<Knot> = Vec::with_capacity(knots.len());
    out.push(knots[0]);
    for i in 1..knots.len() - 1 {
        let k = knots[i];
        let prev = *out.last().unwrap();
        let next = knots[i + 1];
        if k.jump() == 0.0 {
            let t = (k.x - prev.x) / (next.x - prev.x);
            let line = prev.right + t * (next.left - prev.right);
            if (line - k.right).abs() <= TOL {
                continue;
            }
        }
        out.push(k);
    }
    out.push(*knots.last().unwrap());
    out
}

pub(crate) fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    v.dedup_by(|b, a| (*b - *a).abs() <= TOL);
}

/// A finite distribution: sorted, merged `(state, mass)` pairs with positive
/// masses summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicDist {
    atoms: Vec<(f64, f64)>,
}

impl AtomicDist {
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms
            .iter()
            .any(|&(x, m)| !x.is_finite() || !m.is_finite() || m < -TOL)
        {
            return Err(Error::invariant(
                "atom masses must be finite and nonnegative",
            ));
        }
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, m) in atoms {
            match merged.last_mut() {
                Some(last) if (x - last.0).abs() <= TOL => last.1 += m,
                _ => merged.push((x, m)),
            }
        }
        merged.retain(|&(_, m)| m > TOL);
        let total: f64 = merged.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invariant(format!(
                "atom masses must sum to 1, got {total}"
            )));
        }
        Ok(AtomicDist { atoms: merged })
    }

    pub fn dirac(x: f64) -> Self {
        AtomicDist {
            atoms: vec![(x, 1.0)],
        }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn support(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.0)
    }

    pub fn to_cdf(&self, domain: Domain) -> Result<Cdf> {
        let mut acc = 0.0;
        let knots = self
            .atoms
            .iter()
            .map(|&(x, m)| {
                let left = acc;
                acc += m;
                Knot::new(x, left, acc)
            })
            .collect::<Vec<_>>();
        let mut knots = knots;
        if let Some(last) = knots.last_mut() {
            last.right = 1.0;
        }
        Cdf::new(domain, knots)
    }

    /// `q`-quantile interval, computed directly on the atom list.
    pub fn quantile_interval(&self, q: f64) -> QuantileInterval {
        let mut acc = 0.0;
        let mut lo = None;
        for &(x, m) in &self.atoms {
            acc += m;
            if lo.is_none() && acc >= q - TOL {
                lo = Some(x);
            }
            if acc > q + TOL {
                return QuantileInterval {
                    lo: lo.unwrap_or(x),
                    hi: x,
                };
            }
        }
        let last = self.atoms.last().map(|a| a.0).unwrap_or(0.0);
        QuantileInterval {
            lo: lo.unwrap_or(last),
            hi: last,
        }
    }
}

/// Accumulates atoms and uniform pieces of mass, then emits the [`Cdf`].
#[derive(Clone, Debug, Default)]
pub struct MeasureBuilder {
    atoms: Vec<(f64, f64)>,
    uniforms: Vec<(f64, f64, f64)>,
}

impl MeasureBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn atom(&mut self, x: f64, mass: f64) {
        if mass > 0.0 {
            self.atoms.push((x, mass));
        }
    }

    /// Mass spread uniformly over `[a, b]` (in either order).
    pub fn uniform(&mut self, a: f64, b: f64, mass: f64) {
        if mass <= 0.0 {
            return;
        }
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if b - a <= TOL {
            self.atoms.push((a, mass));
        } else {
            self.uniforms.push((a, b, mass));
        }
    }

    pub fn build(&self, domain: Domain) -> Result<Cdf> {
        let mut xs: Vec<f64> = Vec::with_capacity(2 * self.uniforms.len() + self.atoms.len() + 2);
        xs.push(domain.lo);
        xs.push(domain.hi);
        xs.extend(self.atoms.iter().map(|a| domain.clamp(a.0)));
        for &(a, b, _) in &self.uniforms {
            xs.push(domain.clamp(a));
            xs.push(domain.clamp(b));
        }
        sort_dedup(&mut xs);
        let index = |x: f64| -> usize {
            let x = domain.clamp(x);
            let i = xs.partition_point(|&y| y < x - TOL);
            i.min(xs.len() - 1)
        };

        let n = xs.len();
        let mut point = vec![0.0; n];
        let mut density_delta = vec![0.0; n + 1];
        for &(x, m) in &self.atoms {
            point[index(x)] += m;
        }
        for &(a, b, m) in &self.uniforms {
            let (ia, ib) = (index(a), index(b));
            if ia == ib {
                point[ia] += m;
                continue;
            }
            let density = m / (xs[ib] - xs[ia]);
            density_delta[ia] += density;
            density_delta[ib] -= density;
        }

        let mut knots = Vec::with_capacity(n);
        let mut acc = Neumaier::default();
        let mut density = 0.0;
        for i in 0..n {
            if i > 0 {
                acc.add(density * (xs[i] - xs[i - 1]));
            }
            let left = acc.value();
            acc.add(point[i]);
            knots.push(Knot::new(xs[i], left, acc.value()));
            density += density_delta[i];
        }
        let total = acc.value();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invariant(format!(
                "measure has total mass {total}, expected 1"
            )));
        }
        for k in knots.iter_mut() {
            k.left = (k.left / total).min(1.0);
            k.right = (k.right / total).min(1.0);
        }
        Cdf::new(domain, knots)
    }
}

/// Compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Convex combination of CDFs on a shared domain.
pub fn mix(parts: &[(f64, &Cdf)]) -> Result<Cdf> {
    let (first_w, first) = parts
        .first()
        .ok_or_else(|| Error::invariant("mix needs at least one part"))?;
    let _ = first_w;
    let domain = first.domain;
    let mut total = 0.0;
    for (w, d) in parts {
        if *w < -TOL || !w.is_finite() {
            return Err(Error::invariant(format!("mixing weight {w} is negative")));
        }
        if !d.domain.same_as(&domain) {
            return Err(Error::invariant("mixed CDFs must share a domain"));
        }
        total += w;
    }
    if (total - 1.0).abs() > TOL {
        return Err(Error::invariant(format!(
            "mixing weights sum to {total}, expected 1"
        )));
    }
    let cdfs: Vec<&Cdf> = parts.iter().map(|p| p.1).collect();
    let knots = Cdf::merged_states(&cdfs)
        .into_iter()
        .map(|x| {
            let left = parts.iter().map(|(w, d)| w * d.before(x)).sum();
            let right = parts.iter().map(|(w, d)| w * d.at(x)).sum();
            Knot::new(x, left, right)
        })
        .collect();
    Cdf::new(domain, knots)
}

/// Sup-norm distance, checking both one-sided values at every merged knot.
pub fn ks_distance(a: &Cdf, b: &Cdf) -> Result<f64> {
    if !a.domain.same_as(&b.domain) {
        return Err(Error::invariant("KS distance needs a shared domain"));
    }
    Ok(Cdf::merged_states(&[a, b])
        .into_iter()
        .map(|x| {
            let l = (a.before(x) - b.before(x)).abs();
            let r = (a.at(x) - b.at(x)).abs();
            l.max(r)
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Domain {
        Domain::unit()
    }

    fn h_upper_uniform_median() -> Cdf {
        Cdf::new(
            unit(),
            vec![Knot::continuous(0.0, 0.0), Knot::continuous(0.5, 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn eval_examples() {
        let u = Cdf::uniform(unit());
        assert_eq!(u.eval(0.3, Side::Right).unwrap(), 0.3);
        let d = Cdf::dirac(unit(), 0.5).unwrap();
        assert_eq!(d.eval(0.5, Side::Left).unwrap(), 0.0);
        assert_eq!(d.eval(0.5, Side::Right).unwrap(), 1.0);
        let two = Cdf::atoms(unit(), &[(0.25, 0.5), (0.5, 0.5)]).unwrap();
        assert_eq!(two.eval(0.3, Side::Right).unwrap(), 0.5);
    }

    #[test]
    fn eval_outside_domain_is_an_error() {
        let u = Cdf::uniform(unit());
        assert!(matches!(
            u.eval(1.5, Side::Right),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            u.eval(-0.1, Side::Left),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn left_limit_at_bottom_is_zero() {
        let d = Cdf::dirac(unit(), 0.0).unwrap();
        assert_eq!(d.eval(0.0, Side::Left).unwrap(), 0.0);
        assert_eq!(d.eval(0.0, Side::Right).unwrap(), 1.0);
    }

    #[test]
    fn gen_inverse_examples() {
        let u = Cdf::uniform(unit());
        assert!((u.gen_inverse(0.3) - 0.3).abs() < 1e-15);
        assert_eq!(u.gen_inverse(0.0), 0.0);
        let d = Cdf::dirac(unit(), 0.5).unwrap();
        assert_eq!(d.gen_inverse(0.7), 0.5);
        assert_eq!(d.gen_inverse(1.0), 0.5);
        // oracle: bisection on min{2x, 1} = 0.6
        let h = h_upper_uniform_median();
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (2.0 * mid).min(1.0) >= 0.6 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((h.gen_inverse(0.6) - hi).abs() < 1e-12);
        assert!((hi - 0.3).abs() < 1e-12);
    }

    #[test]
    fn gen_inverse_flat_returns_left_edge() {
        // flat at 1/2 on [1/4, 3/4)
        let c = Cdf::new(
            unit(),
            vec![
                Knot::continuous(0.0, 0.0),
                Knot::continuous(0.25, 0.5),
                Knot::continuous(0.75, 0.5),
                Knot::continuous(1.0, 1.0),
            ],
        )
        .unwrap();
        assert!((c.gen_inverse(0.5) - 0.25).abs() < 1e-15);
        assert!((c.upper_inverse(0.5) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn upper_inverse_examples() {
        let u = Cdf::uniform(unit());
        assert!((u.upper_inverse(0.3) - 0.3).abs() < 1e-15);
        let two = Cdf::atoms(unit(), &[(0.0, 0.5), (1.0, 0.5)]).unwrap();
        assert_eq!(two.upper_inverse(0.5), 1.0);
        let d = Cdf::dirac(unit(), 0.5).unwrap();
        assert_eq!(d.upper_inverse(0.0), 0.5);
    }

    #[test]
    fn quantile_interval_examples() {
        let g = Cdf::atoms(unit(), &[(0.25, 0.5), (0.75, 0.5)]).unwrap();
        assert_eq!(
            g.quantile_interval(0.5),
            QuantileInterval { lo: 0.25, hi: 0.75 }
        );
        let d = Cdf::dirac(unit(), 0.4).unwrap();
        for q in [0.1, 0.5, 0.9] {
            assert_eq!(
                d.quantile_interval(q),
                QuantileInterval { lo: 0.4, hi: 0.4 }
            );
        }
        let skew = Cdf::atoms(unit(), &[(0.0, 0.3), (1.0, 0.7)]).unwrap();
        assert_eq!(
            skew.quantile_interval(0.5),
            QuantileInterval { lo: 1.0, hi: 1.0 }
        );
    }

    #[test]
    fn atomic_quantile_interval_matches_cdf_route() {
        let cases: &[&[(f64, f64)]] = &[
            &[(0.25, 0.5), (0.75, 0.5)],
            &[(0.0, 0.3), (1.0, 0.7)],
            &[(0.1, 0.2), (0.4, 0.3), (0.6, 0.25), (0.9, 0.25)],
            &[(0.3, 1.0)],
        ];
        for atoms in cases {
            let a = AtomicDist::new(atoms.to_vec()).unwrap();
            let c = a.to_cdf(unit()).unwrap();
            for q in [0.1, 0.2, 0.25, 1.0 / 3.0, 0.5, 0.75, 0.9] {
                assert_eq!(
                    a.quantile_interval(q),
                    c.quantile_interval(q),
                    "{atoms:?} q={q}"
                );
            }
        }
    }

    #[test]
    fn mix_examples() {
        let u = Cdf::uniform(unit());
        assert_eq!(mix(&[(1.0, &u)]).unwrap(), u);
        let d0 = Cdf::dirac(unit(), 0.0).unwrap();
        let d1 = Cdf::dirac(unit(), 1.0).unwrap();
        let m = mix(&[(0.5, &d0), (0.5, &d1)]).unwrap();
        for x in [0.0, 0.3, 0.99] {
            assert_eq!(m.at(x), 0.5);
        }
        let half = Cdf::dirac(unit(), 0.5).unwrap();
        let m = mix(&[(0.5, &u), (0.5, &half)]).unwrap();
        assert!((m.at(0.5) - 0.75).abs() < 1e-15);
        assert!((m.before(0.5) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn mix_rejects_bad_weights() {
        let u = Cdf::uniform(unit());
        assert!(matches!(mix(&[(0.7, &u)]), Err(Error::Invariant(_))));
        assert!(mix(&[(1.2, &u), (-0.2, &u)]).is_err());
    }

    #[test]
    fn ks_examples() {
        let u = Cdf::uniform(unit());
        assert_eq!(ks_distance(&u, &u).unwrap(), 0.0);
        let d0 = Cdf::dirac(unit(), 0.0).unwrap();
        let d1 = Cdf::dirac(unit(), 1.0).unwrap();
        assert_eq!(ks_distance(&d0, &d1).unwrap(), 1.0);
        let half = Cdf::dirac(unit(), 0.5).unwrap();
        // oracle: sup |x - 1{x ≥ 1/2}| on a fine grid, approaching 1/2
        let grid_sup = (0..=100_000)
            .map(|i| i as f64 / 100_000.0)
            .map(|x| (x - if x >= 0.5 { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        let ks = ks_distance(&u, &half).unwrap();
        assert!((ks - 0.5).abs() < 1e-15);
        assert!(ks >= grid_sup - 1e-15);
    }

    #[test]
    fn construction_normalizes() {
        // duplicated, unsorted, redundant knots
        let c = Cdf::new(
            unit(),
            vec![
                Knot::continuous(1.0, 1.0),
                Knot::continuous(0.5, 0.5),
                Knot::continuous(0.5 + 1e-14, 0.5),
                Knot::continuous(0.0, 0.0),
            ],
        )
        .unwrap();
        assert_eq!(c, Cdf::uniform(unit()));
    }

    #[test]
    fn construction_rejects_bad_values() {
        assert!(Cdf::new(unit(), vec![Knot::continuous(0.5, 0.9)]).is_err());
        assert!(Cdf::new(
            unit(),
            vec![Knot::continuous(0.2, 0.6), Knot::continuous(0.4, 0.3)]
        )
        .is_err());
        assert!(Cdf::new(unit(), vec![Knot::new(2.0, 0.0, 1.0)]).is_err());
        assert!(Domain::new(1.0, 1.0).is_err());
    }

    #[test]
    fn from_graph_builds_atoms_and_flats() {
        // atom 1/2 at 1/4, then linear to (1/2, 1)
        let c = Cdf::from_graph(unit(), &[(0.25, 0.0), (0.25, 0.5), (0.5, 1.0)]).unwrap();
        assert_eq!(c.before(0.25), 0.0);
        assert_eq!(c.at(0.25), 0.5);
        assert!((c.at(0.375) - 0.75).abs() < 1e-15);
        assert_eq!(c.at(0.7), 1.0);
    }

    #[test]
    fn splice_matches_pointwise_definition() {
        let lower = Cdf::new(
            unit(),
            vec![Knot::continuous(0.5, 0.0), Knot::continuous(1.0, 1.0)],
        )
        .unwrap();
        let upper = h_upper_uniform_median();
        let c = Cdf::splice(
            unit(),
            &[0.0, 0.25, 0.75],
            &[
                Piece::Curve(&upper),
                Piece::Const(0.5),
                Piece::Curve(&lower),
            ],
        )
        .unwrap();
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let expect = if x < 0.25 {
                (2.0 * x).min(1.0)
            } else if x < 0.75 {
                0.5
            } else {
                (2.0 * x - 1.0).max(0.0)
            };
            assert!((c.at(x) - expect).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn measure_builder_mixes_atoms_and_uniforms() {
        let mut b = MeasureBuilder::new();
        b.uniform(0.0, 1.0, 0.5);
        b.atom(0.5, 0.5);
        let c = b.build(unit()).unwrap();
        let u = Cdf::uniform(unit());
        let half = Cdf::dirac(unit(), 0.5).unwrap();
        let m = mix(&[(0.5, &u), (0.5, &half)]).unwrap();
        assert!(ks_distance(&c, &m).unwrap() < 1e-15);
    }

    #[test]
    fn map_values_inserts_level_crossings() {
        let u = Cdf::uniform(unit());
        let q = 0.5;
        let upper = u.map_values(&[q], |v| (v / q).min(1.0)).unwrap();
        assert_eq!(upper, h_upper_uniform_median());
    }
}
