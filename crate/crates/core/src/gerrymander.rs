//! Districting as information design.
//!
//! A district is a posterior over voter types, and party 1 wins it when the
//! district's median type exceeds the aggregate shock `ρ ~ R`. A districting
//! plan is therefore a distribution `H` of district medians, implementable
//! with `q = 1/2`, and party 1's expected seat share is `∫R dH`.

use std::fmt;
use std::str::FromStr;

use crate::dist::{sort_dedup, Cdf};
use crate::error::{Error, Result};
use crate::experiment::{matching_experiment, ParametricExperiment};
use crate::objective::{stieltjes_integral, Objective};
use crate::optimize::{optimize_quantile_dist, Optimum};
use crate::selection::{matching_selection, Selection};

/// Districts are decided by their median voter.
pub const MEDIAN: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Maximize party 1's expected seats: `V = R`.
    Partisan,
    /// Make districts safe for whichever party holds them: `V = max{R, 1 − R}`.
    Bipartisan,
    /// Make districts competitive: `V = min{R, 1 − R}`.
    Nonpartisan,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Partisan => "partisan",
            Mode::Bipartisan => "bipartisan",
            Mode::Nonpartisan => "nonpartisan",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "partisan" => Ok(Mode::Partisan),
            "bipartisan" => Ok(Mode::Bipartisan),
            "nonpartisan" => Ok(Mode::Nonpartisan),
            other => Err(Error::precondition(format!(
                "unknown mode {other:?}; expected partisan, bipartisan or nonpartisan"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElectoralModel {
    voters: Cdf,
    shock: Cdf,
}

impl ElectoralModel {
    /// `voters` is the distribution `F` of voter types, `shock` the
    /// distribution `R` of the aggregate shock, which must have no atoms.
    pub fn new(voters: Cdf, shock: Cdf) -> Result<Self> {
        if shock.jumps().next().is_some() {
            return Err(Error::precondition(
                "the shock distribution must be continuous",
            ));
        }
        Ok(ElectoralModel { voters, shock })
    }

    pub fn voters(&self) -> &Cdf {
        &self.voters
    }

    pub fn shock(&self) -> &Cdf {
        &self.shock
    }

    /// `R` as an objective on the voter domain.
    pub fn win_probability(&self) -> Result<Objective> {
        objective_from_mode(&self.shock, Mode::Partisan, &self.voters)
    }
}

/// The seat objective for `mode`, piecewise linear on the voter domain.
pub fn objective_from_mode(shock: &Cdf, mode: Mode, voters: &Cdf) -> Result<Objective> {
    let d = voters.domain();
    let mut xs: Vec<f64> = shock
        .knots()
        .iter()
        .map(|k| k.x)
        .filter(|&x| d.contains(x))
        .collect();
    xs.push(d.lo());
    xs.push(d.hi());
    if mode != Mode::Partisan {
        // R crosses ½ on [gen_inverse(½), upper_inverse(½)]
        for x in [shock.gen_inverse(0.5), shock.upper_inverse(0.5)] {
            if d.contains(x) {
                xs.push(x);
            }
        }
    }
    let mut xs: Vec<f64> = xs.into_iter().map(|x| d.clamp(x)).collect();
    sort_dedup(&mut xs);
    let points = xs
        .into_iter()
        .map(|x| {
            let r = shock.at(x);
            let v = match mode {
                Mode::Partisan => r,
                Mode::Bipartisan => r.max(1.0 - r),
                Mode::Nonpartisan => r.min(1.0 - r),
            };
            (x, v)
        })
        .collect();
    Objective::piecewise_linear(points)
}

#[derive(Clone, Debug)]
pub struct DistrictPlan {
    pub mode: Mode,
    pub objective: Objective,
    pub optimum: Optimum,
    /// `∫R dH*`.
    pub expected_seat_share: f64,
    /// Positively assortative pairing of voter types across the median.
    pub experiment: ParametricExperiment,
    /// `ω ↦ H*⁻¹(2ω)`.
    pub selection: Selection,
}

impl DistrictPlan {
    pub fn h_star(&self) -> &Cdf {
        &self.optimum.h_star
    }
}

/// The optimal plan for `mode` and the matching experiment that carries it out.
pub fn district_plan(model: &ElectoralModel, mode: Mode) -> Result<DistrictPlan> {
    let objective = objective_from_mode(&model.shock, mode, &model.voters)?;
    let optimum = optimize_quantile_dist(&objective, &model.voters, MEDIAN)?;
    let expected_seat_share = stieltjes_integral(&model.win_probability()?, &optimum.h_star);
    let experiment = matching_experiment(&model.voters, MEDIAN)?;
    let selection = matching_selection(&optimum.h_star, &model.voters, MEDIAN)?;
    Ok(DistrictPlan {
        mode,
        objective,
        optimum,
        expected_seat_share,
        experiment,
        selection,
    })
}

/// `(ρ, 1 − H(ρ⁻))` on `grid` evenly spaced shocks over `H`'s domain: the
/// share of districts whose median is at least `ρ`.
pub fn seat_share_curve(h: &Cdf, grid: usize) -> Vec<(f64, f64)> {
    h.domain()
        .grid(grid.max(2))
        .into_iter()
        .map(|rho| (rho, 1.0 - h.before(rho)))
        .collect()
}
