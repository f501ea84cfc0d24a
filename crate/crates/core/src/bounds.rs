//! The lowest and highest implementable distributions of the posterior
//! q-quantile, and the membership test for the set between them.

use crate::dist::Cdf;
use crate::error::{Error, Result};
use crate::TOL;

pub(crate) fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::precondition(format!(
            "quantile q = {q} must lie in (0, 1)"
        )))
    }
}

/// `(H̲, H̄)` with `H̲ = max{0, (F − q)/(1 − q)}` and `H̄ = min{F/q, 1}`.
pub fn quantile_bounds(prior: &Cdf, q: f64) -> Result<(Cdf, Cdf)> {
    check_q(q)?;
    let lower = prior.map_values(&[q], |v| ((v - q) / (1.0 - q)).max(0.0))?;
    let upper = prior.map_values(&[q], |v| (v / q).min(1.0))?;
    Ok((lower, upper))
}

/// Which bound a candidate crosses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundSide {
    /// `H < H̲`: too much mass above the state.
    Lower,
    /// `H > H̄`: too much mass below the state.
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Implementability {
    Yes,
    No {
        /// First merged knot at which a bound is violated.
        x: f64,
        /// Whether the violation is in the left limit at `x` or the value.
        limit: crate::dist::Side,
        side: BoundSide,
        /// Amount by which the bound is exceeded.
        gap: f64,
    },
}

impl Implementability {
    pub fn is_yes(&self) -> bool {
        matches!(self, Implementability::Yes)
    }
}

/// Checks `H̲ ≤ H ≤ H̄` at every merged knot, on both sides. All three
/// functions are linear between merged knots, so this is exact.
pub fn is_implementable(h: &Cdf, prior: &Cdf, q: f64) -> Result<Implementability> {
    use crate::dist::Side;
    if !h.domain().same_as(&prior.domain()) {
        return Err(Error::invariant("candidate and prior must share a domain"));
    }
    let (lower, upper) = quantile_bounds(prior, q)?;
    for x in Cdf::merged_states(&[h, &lower, &upper]) {
        for limit in [Side::Left, Side::Right] {
            let (hv, lv, uv) = match limit {
                Side::Left => (h.before(x), lower.before(x), upper.before(x)),
                Side::Right => (h.at(x), lower.at(x), upper.at(x)),
            };
            if hv < lv - TOL {
                return Ok(Implementability::No {
                    x,
                    limit,
                    side: BoundSide::Lower,
                    gap: lv - hv,
                });
            }
            if hv > uv + TOL {
                return Ok(Implementability::No {
                    x,
                    limit,
                    side: BoundSide::Upper,
                    gap: hv - uv,
                });
            }
        }
    }
    Ok(Implementability::Yes)
}
