//! Maximizing `∫ V dH` over implementable distributions.
//!
//! The optimum is `∫₀¹ max{V(x) : x ∈ [H̄⁻¹(p), H̲⁻¹(p)]} dp`, attained by the
//! distribution whose inverse is the smallest maximizer `J*(p)`. The sweep
//! below splits `[0, 1]` at every `p` where either interval end has a kink
//! or jump, or crosses a breakpoint of `V`. On each resulting segment both
//! ends are affine in `p`, so the maximizer is one of three candidates (the
//! lower end, the upper end, or the best breakpoint strictly inside) and the
//! winner only changes where two candidate values cross.

use crate::bounds::{check_q, quantile_bounds};
use crate::dist::{sort_dedup, Cdf, Neumaier, Piece, QuantileInterval};
use crate::error::{Error, Result};
use crate::objective::{value_tol, Objective};
use crate::TOL;

/// `[H̄⁻¹(p), H̲⁻¹(p)] = [F⁻¹(qp), F⁻¹(q + (1 − q)p)]`.
pub fn feasible_interval(prior: &Cdf, q: f64, p: f64) -> Result<QuantileInterval> {
    check_q(q)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::precondition(format!("p = {p} must lie in [0, 1]")));
    }
    Ok(QuantileInterval {
        lo: prior.gen_inverse(q * p),
        hi: prior.gen_inverse(q + (1.0 - q) * p),
    })
}

/// One linear piece of a quantile path `p ↦ x` on `(p0, p1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathPiece {
    pub p0: f64,
    pub p1: f64,
    /// Limit of the path as `p ↓ p0`.
    pub x0: f64,
    /// Limit of the path as `p ↑ p1`.
    pub x1: f64,
}

impl PathPiece {
    fn at(&self, p: f64) -> f64 {
        if self.p1 <= self.p0 {
            return self.x0;
        }
        self.x0 + (p - self.p0) / (self.p1 - self.p0) * (self.x1 - self.x0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Uniqueness {
    Unique,
    /// The argmax is not a single point on a set of `p` of positive length.
    /// `alternative` is built from the largest maximizer instead.
    NonUnique {
        alternative: Cdf,
        alternative_path: Vec<PathPiece>,
        tie_length: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Optimum {
    pub h_star: Cdf,
    pub value: f64,
    /// `J*`, nondecreasing, as linear pieces over `[0, 1]`.
    pub j_star: Vec<PathPiece>,
    pub uniqueness: Uniqueness,
}

impl Optimum {
    pub fn is_unique(&self) -> bool {
        matches!(self.uniqueness, Uniqueness::Unique)
    }

    /// `J*(p)`, left-continuous.
    pub fn j_star_at(&self, p: f64) -> f64 {
        let i = self.j_star.partition_point(|s| s.p1 < p);
        match self.j_star.get(i) {
            Some(s) => s.at(p.max(s.p0)),
            None => self.j_star.last().map(|s| s.x1).unwrap_or(f64::NAN),
        }
    }
}

/// `x = c0 + c1·p` on an open segment.
#[derive(Clone, Copy, Debug)]
struct Affine {
    c0: f64,
    c1: f64,
}

impl Affine {
    fn fit(p_a: f64, x_a: f64, p_b: f64, x_b: f64) -> Self {
        let c1 = (x_b - x_a) / (p_b - p_a);
        Affine {
            c0: x_a - c1 * p_a,
            c1,
        }
    }

    fn at(&self, p: f64) -> f64 {
        self.c0 + self.c1 * p
    }
}

#[derive(Clone, Copy, Debug)]
enum Candidate {
    Lower,
    Fixed(f64),
    Upper,
}

/// Roots in `(0, 1)` of `f`, known to be a polynomial of degree ≤ 2 in `t`,
/// from its values at `t = 1/4, 1/2, 3/4`.
fn quadratic_roots(f: impl Fn(f64) -> f64, scale: f64) -> Vec<f64> {
    let (y1, y2, y3) = (f(0.25), f(0.5), f(0.75));
    if y1.abs().max(y2.abs()).max(y3.abs()) <= value_tol(scale) {
        return Vec::new();
    }
    // y(t) = α + β(t − ½) + γ(t − ½)²
    let alpha = y2;
    let beta = 2.0 * (y3 - y1);
    let gamma = 8.0 * (y1 + y3 - 2.0 * y2);
    let mut roots = Vec::new();
    if gamma.abs() <= 1e-12 * (beta.abs() + alpha.abs()) {
        if beta != 0.0 {
            roots.push(0.5 - alpha / beta);
        }
    } else {
        let disc = beta * beta - 4.0 * gamma * alpha;
        if disc >= 0.0 {
            let s = disc.sqrt();
            let qv = -0.5 * (beta + beta.signum() * s);
            if qv != 0.0 {
                roots.push(0.5 + qv / gamma);
                roots.push(0.5 + alpha / qv);
            } else {
                roots.push(0.5);
            }
        }
    }
    roots.retain(|&t| t > 1e-12 && t < 1.0 - 1e-12);
    roots
}

/// Probabilities `p` at which the feasible interval has a kink or jump, or
/// one of its ends crosses a breakpoint of `V`.
fn p_breakpoints(v: &Objective, prior: &Cdf, q: f64) -> Vec<f64> {
    let mut levels = prior.levels();
    let d = prior.domain();
    for c in v.breakpoints() {
        if d.contains(c) {
            levels.push(prior.before(c));
            levels.push(prior.at(c));
        }
    }
    let mut ps = vec![0.0, 1.0];
    for lvl in levels {
        ps.push(lvl / q);
        ps.push((lvl - q) / (1.0 - q));
    }
    ps.retain(|p| (0.0..=1.0).contains(p));
    sort_dedup(&mut ps);
    ps
}

/// Maximizes `∫ V dH` over `H̲ ≤ H ≤ H̄`.
pub fn optimize_quantile_dist(v: &Objective, prior: &Cdf, q: f64) -> Result<Optimum> {
    check_q(q)?;
    let domain = prior.domain();
    let lower_end = |p: f64| prior.gen_inverse(q * p);
    let upper_end = |p: f64| prior.gen_inverse(q + (1.0 - q) * p);

    let mut min_path: Vec<PathPiece> = Vec::new();
    let mut max_path: Vec<PathPiece> = Vec::new();
    let mut value = Neumaier::default();
    let mut tie_length = 0.0;

    for seg in p_breakpoints(v, prior, q).windows(2) {
        let (p0, p1) = (seg[0], seg[1]);
        let len = p1 - p0;
        let (pa, pb) = (p0 + 0.25 * len, p0 + 0.75 * len);
        let a = Affine::fit(pa, lower_end(pa), pb, lower_end(pb));
        let b = Affine::fit(pa, upper_end(pa), pb, upper_end(pb));
        let pm = 0.5 * (p0 + p1);

        // best breakpoint strictly inside the interval; the set is fixed on
        // the open segment
        let inside = v.breakpoints_between(a.at(pm) + TOL, b.at(pm) - TOL);
        let knot = inside.iter().map(|&c| (c, v.value(c))).fold(
            None,
            |best: Option<(f64, f64, f64)>, (c, val)| match best {
                None => Some((c, c, val)),
                Some((lo, hi, bv)) => {
                    if val > bv + value_tol(bv) {
                        Some((c, c, val))
                    } else if val >= bv - value_tol(bv) {
                        Some((lo, c, bv))
                    } else {
                        Some((lo, hi, bv))
                    }
                }
            },
        );

        let fa = |p: f64| v.value(a.at(p));
        let fb = |p: f64| v.value(b.at(p));
        let at_t = |t: f64| p0 + t * len;
        let scale = fa(pm).abs().max(fb(pm).abs());
        let mut cuts = vec![0.0, 1.0];
        cuts.extend(quadratic_roots(|t| fa(at_t(t)) - fb(at_t(t)), scale));
        if let Some((_, _, kv)) = knot {
            let scale = scale.max(kv.abs());
            cuts.extend(quadratic_roots(|t| fa(at_t(t)) - kv, scale));
            cuts.extend(quadratic_roots(|t| fb(at_t(t)) - kv, scale));
        }
        sort_dedup(&mut cuts);

        for w in cuts.windows(2) {
            let (s0, s1) = (at_t(w[0]), at_t(w[1]));
            let sm = 0.5 * (s0 + s1);
            let mut cands = vec![(a.at(sm), fa(sm), Candidate::Lower)];
            if let Some((lo, hi, kv)) = knot {
                cands.push((lo, kv, Candidate::Fixed(lo)));
                cands.push((hi, kv, Candidate::Fixed(hi)));
            }
            cands.push((b.at(sm), fb(sm), Candidate::Upper));
            let best = cands.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
            let tol = value_tol(best);
            let tied: Vec<_> = cands.iter().filter(|c| c.1 >= best - tol).collect();
            let (first, last) = (tied[0], tied[tied.len() - 1]);

            let piece = |c: Candidate| {
                let x = |p: f64| match c {
                    Candidate::Lower => a.at(p),
                    Candidate::Upper => b.at(p),
                    Candidate::Fixed(x) => x,
                };
                PathPiece {
                    p0: s0,
                    p1: s1,
                    x0: domain.clamp(x(s0)),
                    x1: domain.clamp(x(s1)),
                }
            };
            let jmin = piece(first.2);
            let jmax = piece(last.2);
            let fj = |p: f64| v.value(jmin.at(p));
            value.add((s1 - s0) / 6.0 * (fj(s0) + 4.0 * fj(sm) + fj(s1)));
            if last.0 - first.0 > 1e-10 {
                tie_length += s1 - s0;
            }
            min_path.push(jmin);
            max_path.push(jmax);
        }
    }

    let h_star = path_to_cdf(prior, &min_path)?;
    let uniqueness = if tie_length > TOL {
        Uniqueness::NonUnique {
            alternative: path_to_cdf(prior, &max_path)?,
            alternative_path: max_path,
            tie_length,
        }
    } else {
        Uniqueness::Unique
    };
    Ok(Optimum {
        h_star,
        value: value.value(),
        j_star: min_path,
        uniqueness,
    })
}

/// The distribution whose inverse is the given nondecreasing path.
fn path_to_cdf(prior: &Cdf, path: &[PathPiece]) -> Result<Cdf> {
    let domain = prior.domain();
    let mut points = Vec::with_capacity(2 * path.len() + 2);
    points.push((domain.lo(), 0.0));
    let mut x_max = domain.lo();
    for s in path {
        for (x, p) in [(s.x0, s.p0), (s.x1, s.p1)] {
            x_max = x_max.max(x);
            points.push((x_max, p));
        }
    }
    points.push((domain.hi(), 1.0));
    Cdf::from_graph(domain, &points)
}

/// `H̲` below `x*`, `H̄` from `x*` on: the optimum for a quasi-concave
/// objective peaking at `x*`.
pub fn solution_quasiconcave(x_star: f64, prior: &Cdf, q: f64) -> Result<Cdf> {
    let d = prior.domain();
    if !d.contains(x_star) {
        return Err(Error::Domain {
            x: x_star,
            lo: d.lo(),
            hi: d.hi(),
        });
    }
    let (lower, upper) = quantile_bounds(prior, q)?;
    Cdf::splice(
        d,
        &[d.lo(), d.clamp(x_star)],
        &[Piece::Curve(&lower), Piece::Curve(&upper)],
    )
}

/// `H_p`: `H̄` below `F⁻¹(qp)`, flat at `p` up to `F⁻¹(q + (1 − q)p)`, `H̲`
/// from there on.
pub fn hp_distribution(p: f64, prior: &Cdf, q: f64) -> Result<Cdf> {
    let iv = feasible_interval(prior, q, p)?;
    let (lower, upper) = quantile_bounds(prior, q)?;
    let d = prior.domain();
    Cdf::splice(
        d,
        &[d.lo(), iv.lo, iv.hi],
        &[Piece::Curve(&upper), Piece::Const(p), Piece::Curve(&lower)],
    )
}

/// The optimum for a strictly quasi-convex objective: `H_{p*}` where `p*`
/// makes the two ends of the feasible interval equally good. Without an
/// interior indifference point the answer is `H̄` (the lower end always
/// wins) or `H̲` (the upper end always wins, or ties).
pub fn solution_quasiconvex(v: &Objective, prior: &Cdf, q: f64) -> Result<(f64, Cdf)> {
    check_q(q)?;
    if !v.is_quasi_convex_on(prior.domain()) {
        return Err(Error::precondition(
            "objective rises and then falls, so it is not quasi-convex",
        ));
    }
    let advantage = |p: f64| {
        let iv = QuantileInterval {
            lo: prior.gen_inverse(q * p),
            hi: prior.gen_inverse(q + (1.0 - q) * p),
        };
        let (va, vb) = (v.value(iv.lo), v.value(iv.hi));
        (va - vb, value_tol(va.max(vb)))
    };
    let lower_wins = |p: f64| {
        let (d, tol) = advantage(p);
        d > tol
    };
    let p_star = if lower_wins(1.0) {
        1.0
    } else if !lower_wins(0.0) {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if advantage(mid).0 > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    Ok((p_star, hp_distribution(p_star, prior, q)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::is_implementable;
    use crate::dist::{ks_distance, Domain};
    use crate::objective::stieltjes_integral;

    fn unit() -> Domain {
        Domain::unit()
    }

    fn uniform() -> Cdf {
        Cdf::uniform(unit())
    }

    /// Midpoint-rule oracle for `∫₀¹ max_{[a(p), b(p)]} V dp`, maximizing by
    /// dense sampling of each interval.
    fn value_oracle(v: &Objective, prior: &Cdf, q: f64, cells: usize, samples: usize) -> f64 {
        let mut acc = 0.0;
        for i in 0..cells {
            let p = (i as f64 + 0.5) / cells as f64;
            let iv = feasible_interval(prior, q, p).unwrap();
            let best = (0..=samples)
                .map(|k| v.value(iv.lo + (iv.hi - iv.lo) * k as f64 / samples as f64))
                .fold(f64::NEG_INFINITY, f64::max);
            acc += best;
        }
        acc / cells as f64
    }

    #[test]
    fn feasible_interval_examples() {
        let f = uniform();
        let iv = feasible_interval(&f, 0.5, 0.5).unwrap();
        assert!((iv.lo - 0.25).abs() < 1e-12 && (iv.hi - 0.75).abs() < 1e-12);
        let iv = feasible_interval(&f, 0.5, 0.0).unwrap();
        assert_eq!(iv.lo, 0.0);
        assert!((iv.hi - 0.5).abs() < 1e-12);
        let iv = feasible_interval(&f, 0.5, 1.0).unwrap();
        assert!((iv.lo - 0.5).abs() < 1e-12 && (iv.hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_objectives() {
        let f = uniform();
        let (lower, upper) = quantile_bounds(&f, 0.5).unwrap();
        let up = optimize_quantile_dist(&Objective::affine(unit(), 0.0, 1.0), &f, 0.5).unwrap();
        assert!((up.value - 0.75).abs() < 1e-12);
        assert!(ks_distance(&up.h_star, &lower).unwrap() < 1e-12);
        assert!(up.is_unique());
        let down = optimize_quantile_dist(&Objective::affine(unit(), 0.0, -1.0), &f, 0.5).unwrap();
        assert!((down.value + 0.25).abs() < 1e-12);
        assert!(ks_distance(&down.h_star, &upper).unwrap() < 1e-12);
    }

    #[test]
    fn centered_quadratic_gives_h_half() {
        let f = uniform();
        let v = Objective::quadratic(0.5);
        let opt = optimize_quantile_dist(&v, &f, 0.5).unwrap();
        assert!((opt.value - 7.0 / 48.0).abs() < 1e-12);
        let h = hp_distribution(0.5, &f, 0.5).unwrap();
        assert!(ks_distance(&opt.h_star, &h).unwrap() < 1e-12);
        assert!((stieltjes_integral(&v, &opt.h_star) - opt.value).abs() < 1e-12);
        // ties only at p = ½
        assert!(opt.is_unique());
        let oracle = value_oracle(&v, &f, 0.5, 4000, 200);
        assert!((oracle - 7.0 / 48.0).abs() < 1e-6);
    }

    #[test]
    fn constant_objective_is_non_unique() {
        let f = uniform();
        let v = Objective::affine(unit(), 2.0, 0.0);
        let opt = optimize_quantile_dist(&v, &f, 0.5).unwrap();
        assert!((opt.value - 2.0).abs() < 1e-12);
        match &opt.uniqueness {
            Uniqueness::NonUnique {
                alternative,
                tie_length,
                ..
            } => {
                let (lower, upper) = quantile_bounds(&f, 0.5).unwrap();
                assert!(ks_distance(&opt.h_star, &upper).unwrap() < 1e-12);
                assert!(ks_distance(alternative, &lower).unwrap() < 1e-12);
                assert!((tie_length - 1.0).abs() < 1e-12);
            }
            Uniqueness::Unique => panic!("every H is optimal for a constant V"),
        }
    }

    #[test]
    fn quasiconcave_examples() {
        let f = uniform();
        let h = solution_quasiconcave(0.5, &f, 0.5).unwrap();
        assert!(ks_distance(&h, &Cdf::dirac(unit(), 0.5).unwrap()).unwrap() < 1e-12);
        let h = solution_quasiconcave(0.25, &f, 0.5).unwrap();
        assert_eq!(h.before(0.25), 0.0);
        assert!((h.at(0.25) - 0.5).abs() < 1e-12);
        assert!((h.at(0.4) - 0.8).abs() < 1e-12);
        assert!((h.at(0.5) - 1.0).abs() < 1e-12);
        let (_, upper) = quantile_bounds(&f, 0.5).unwrap();
        let h = solution_quasiconcave(0.0, &f, 0.5).unwrap();
        assert!(ks_distance(&h, &upper).unwrap() < 1e-12);
    }

    #[test]
    fn quasiconcave_matches_optimizer() {
        let f = uniform();
        for &c in &[0.1, 0.25, 0.5, 0.8] {
            let opt = optimize_quantile_dist(&Objective::tent(c), &f, 0.5).unwrap();
            let h = solution_quasiconcave(c, &f, 0.5).unwrap();
            assert!(ks_distance(&opt.h_star, &h).unwrap() < 1e-12, "peak {c}");
        }
    }

    #[test]
    fn quasiconvex_examples() {
        let f = uniform();
        let (p, h) = solution_quasiconvex(&Objective::quadratic(0.5), &f, 0.5).unwrap();
        assert!((p - 0.5).abs() < 1e-12, "{p}");
        assert!(ks_distance(&h, &hp_distribution(0.5, &f, 0.5).unwrap()).unwrap() < 1e-12);

        let (lower, _) = quantile_bounds(&f, 0.5).unwrap();
        let v = Objective::quadratic(0.0);
        let (p, h) = solution_quasiconvex(&v, &f, 0.5).unwrap();
        assert_eq!(p, 0.0);
        assert!(ks_distance(&h, &lower).unwrap() < 1e-12);
        let opt = optimize_quantile_dist(&v, &f, 0.5).unwrap();
        assert!(ks_distance(&h, &opt.h_star).unwrap() < 1e-12);

        let v = Objective::piecewise_linear(vec![(0.0, 0.5), (0.5, 0.0), (1.0, 0.5)]).unwrap();
        let (p, h) = solution_quasiconvex(&v, &f, 0.5).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        let opt = optimize_quantile_dist(&v, &f, 0.5).unwrap();
        assert!(ks_distance(&h, &opt.h_star).unwrap() < 1e-12);

        assert!(solution_quasiconvex(&Objective::tent(0.5), &f, 0.5).is_err());
    }

    #[test]
    fn hp_examples() {
        let f = uniform();
        let (lower, upper) = quantile_bounds(&f, 0.5).unwrap();
        let h = hp_distribution(0.5, &f, 0.5).unwrap();
        assert!((h.at(0.2) - 0.4).abs() < 1e-12);
        for &x in &[0.25, 0.4, 0.6, 0.7499] {
            assert!((h.at(x) - 0.5).abs() < 1e-12);
        }
        assert!((h.at(0.9) - 0.8).abs() < 1e-12);
        assert!(ks_distance(&hp_distribution(0.0, &f, 0.5).unwrap(), &lower).unwrap() < 1e-12);
        assert!(ks_distance(&hp_distribution(1.0, &f, 0.5).unwrap(), &upper).unwrap() < 1e-12);
        for i in 0..=20 {
            let h = hp_distribution(i as f64 / 20.0, &f, 1.0 / 3.0).unwrap();
            assert!(is_implementable(&h, &f, 1.0 / 3.0).unwrap().is_yes());
        }
    }

    #[test]
    fn sweep_matches_oracle_on_mixed_prior() {
        let f = Cdf::new(
            unit(),
            vec![
                crate::dist::Knot::continuous(0.0, 0.0),
                crate::dist::Knot::new(0.3, 0.2, 0.45),
                crate::dist::Knot::continuous(0.7, 0.6),
                crate::dist::Knot::continuous(1.0, 1.0),
            ],
        )
        .unwrap();
        let v = Objective::piecewise_linear(vec![
            (0.0, 0.3),
            (0.2, -0.1),
            (0.5, 0.6),
            (0.65, 0.1),
            (1.0, 0.4),
        ])
        .unwrap();
        for &q in &[0.2, 0.5, 0.8] {
            let opt = optimize_quantile_dist(&v, &f, q).unwrap();
            let oracle = value_oracle(&v, &f, q, 4000, 400);
            assert!((opt.value - oracle).abs() < 2e-3, "q = {q}");
            assert!((stieltjes_integral(&v, &opt.h_star) - opt.value).abs() < 1e-9);
            assert!(is_implementable(&opt.h_star, &f, q).unwrap().is_yes());
        }
    }

    #[test]
    fn quadratic_roots_cases() {
        let r = quadratic_roots(|t| (t - 0.3) * (t - 0.6), 1.0);
        assert_eq!(r.len(), 2);
        let mut r = r;
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((r[0] - 0.3).abs() < 1e-14 && (r[1] - 0.6).abs() < 1e-14);
        let r = quadratic_roots(|t| 2.0 * t - 1.5, 1.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.75).abs() < 1e-15);
        assert!(quadratic_roots(|_| 0.0, 1.0).is_empty());
        assert!(quadratic_roots(|t| t * t + 1.0, 1.0).is_empty());
    }
}
