//! Can a finite experiment implement an atomic target?
//!
//! Each entry may only send its weight to target atoms inside its quantile
//! interval, and every atom must receive exactly its mass. Intervals against
//! points on a line make this a convex transportation problem: serving the
//! atoms from left to right, always from the open entry whose interval ends
//! first, finds a solution whenever one exists. When it fails, some window
//! of states violates Hall's condition, and that window is the certificate.

use std::collections::HashSet;

use crate::dist::{AtomicDist, QuantileInterval};
use crate::error::{Error, Result};
use crate::experiment::FiniteExperiment;

/// Entries above this count are refused in deterministic mode.
pub const DEFAULT_ENTRY_CAP: usize = 24;

/// How close a state must be to an interval end to count as inside.
const SLACK: f64 = 1e-9;
/// Masses below this are treated as exhausted.
const MASS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Each entry's weight may be split across states.
    Fractional,
    /// Each entry is sent whole to one state.
    Deterministic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityProblem {
    pub experiment: FiniteExperiment,
    pub target: AtomicDist,
    pub mode: Mode,
    /// Entry cap for deterministic mode.
    pub cap: usize,
}

impl FeasibilityProblem {
    pub fn new(experiment: FiniteExperiment, target: AtomicDist, mode: Mode) -> Self {
        FeasibilityProblem {
            experiment,
            target,
            mode,
            cap: DEFAULT_ENTRY_CAP,
        }
    }
}

/// Mass sent from an entry to a target state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Flow {
    pub entry: usize,
    pub state: f64,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Certificate {
    /// Entries whose quantile intervals lie inside `[lo, hi]` carry more
    /// weight than the target puts there.
    Surplus {
        lo: f64,
        hi: f64,
        entries: Vec<usize>,
        supply: f64,
        demand: f64,
    },
    /// The target puts more mass on `[lo, hi]` than all entries whose
    /// intervals meet it can supply.
    Shortage {
        lo: f64,
        hi: f64,
        supply: f64,
        demand: f64,
    },
    /// A fractional solution exists but no assignment of whole entries does.
    NoWholeAssignment { searched_states: usize },
}

impl Certificate {
    /// Re-checks the Hall violation against the problem data.
    pub fn is_valid(&self, exp: &FiniteExperiment, target: &AtomicDist, q: f64) -> bool {
        let intervals = entry_intervals(exp, q);
        let weights: Vec<f64> = exp.entries().iter().map(|e| e.weight).collect();
        match self {
            Certificate::Surplus { lo, hi, .. } => {
                let supply = surplus_supply(&intervals, &weights, *lo, *hi);
                supply > window_demand(target, *lo, *hi) + MASS_TOL
            }
            Certificate::Shortage { lo, hi, .. } => {
                let supply = shortage_supply(&intervals, &weights, *lo, *hi);
                window_demand(target, *lo, *hi) > supply + MASS_TOL
            }
            Certificate::NoWholeAssignment { .. } => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Feasibility {
    Feasible { flows: Vec<Flow> },
    Infeasible { certificate: Certificate },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible { .. })
    }
}

fn entry_intervals(exp: &FiniteExperiment, q: f64) -> Vec<QuantileInterval> {
    exp.entries()
        .iter()
        .map(|e| e.posterior.quantile_interval(q))
        .collect()
}

fn window_demand(target: &AtomicDist, lo: f64, hi: f64) -> f64 {
    target
        .atoms()
        .iter()
        .filter(|a| a.0 >= lo - SLACK && a.0 <= hi + SLACK)
        .fold(0.0, |acc, a| acc + a.1)
}

fn surplus_supply(intervals: &[QuantileInterval], weights: &[f64], lo: f64, hi: f64) -> f64 {
    intervals
        .iter()
        .zip(weights)
        .filter(|(iv, _)| iv.lo >= lo - SLACK && iv.hi <= hi + SLACK)
        .fold(0.0, |acc, (_, w)| acc + w)
}

fn shortage_supply(intervals: &[QuantileInterval], weights: &[f64], lo: f64, hi: f64) -> f64 {
    intervals
        .iter()
        .zip(weights)
        .filter(|(iv, _)| iv.hi >= lo - SLACK && iv.lo <= hi + SLACK)
        .fold(0.0, |acc, (_, w)| acc + w)
}

/// Solves the problem in its configured mode.
pub fn feasibility_check(prob: &FeasibilityProblem, q: f64) -> Result<Feasibility> {
    crate::bounds::check_q(q)?;
    let intervals = entry_intervals(&prob.experiment, q);
    let weights: Vec<f64> = prob.experiment.entries().iter().map(|e| e.weight).collect();
    let fractional = match greedy(&intervals, &weights, &prob.target) {
        Some(flows) => Feasibility::Feasible { flows },
        None => Feasibility::Infeasible {
            certificate: hall_window(&intervals, &weights, &prob.target),
        },
    };
    match prob.mode {
        Mode::Fractional => Ok(fractional),
        Mode::Deterministic => {
            if !fractional.is_feasible() {
                return Ok(fractional);
            }
            if weights.len() > prob.cap {
                return Err(Error::Resource(format!(
                    "deterministic search over {} entries exceeds the cap of {}",
                    weights.len(),
                    prob.cap
                )));
            }
            Ok(whole_assignment(&intervals, &weights, &prob.target))
        }
    }
}

/// Earliest-deadline-first transport of entry weight onto target atoms.
fn greedy(
    intervals: &[QuantileInterval],
    weights: &[f64],
    target: &AtomicDist,
) -> Option<Vec<Flow>> {
    let mut order: Vec<usize> = (0..intervals.len()).collect();
    order.sort_by(|&a, &b| intervals[a].lo.total_cmp(&intervals[b].lo));
    let mut remaining = weights.to_vec();
    let mut open: Vec<usize> = Vec::new();
    let mut next = 0;
    let mut flows = Vec::new();
    for &(x, mass) in target.atoms() {
        while next < order.len() && intervals[order[next]].lo <= x + SLACK {
            open.push(order[next]);
            next += 1;
        }
        // entries that closed before x with weight left can never be served
        if open
            .iter()
            .any(|&i| intervals[i].hi < x - SLACK && remaining[i] > MASS_TOL)
        {
            return None;
        }
        open.retain(|&i| intervals[i].hi >= x - SLACK && remaining[i] > MASS_TOL);
        open.sort_by(|&a, &b| intervals[a].hi.total_cmp(&intervals[b].hi));
        let mut need = mass;
        for &i in &open {
            if need <= MASS_TOL {
                break;
            }
            let m = remaining[i].min(need);
            if m > 0.0 {
                flows.push(Flow {
                    entry: i,
                    state: x,
                    mass: m,
                });
                remaining[i] -= m;
                need -= m;
            }
        }
        if need > MASS_TOL {
            return None;
        }
    }
    if remaining.iter().any(|&r| r > MASS_TOL) {
        return None;
    }
    Some(flows)
}

/// Finds a window `[lo, hi]` violating Hall's condition. Window ends range
/// over interval ends and target atoms.
fn hall_window(
    intervals: &[QuantileInterval],
    weights: &[f64],
    target: &AtomicDist,
) -> Certificate {
    let mut ends: Vec<f64> = intervals.iter().flat_map(|iv| [iv.lo, iv.hi]).collect();
    ends.extend(target.support());
    crate::dist::sort_dedup(&mut ends);
    let mut best: Option<(f64, Certificate)> = None;
    for (i, &lo) in ends.iter().enumerate() {
        for &hi in &ends[i..] {
            let demand = window_demand(target, lo, hi);
            let inside = surplus_supply(intervals, weights, lo, hi);
            let gap = inside - demand;
            if gap > MASS_TOL && best.as_ref().is_none_or(|b| gap > b.0 + MASS_TOL) {
                let entries = intervals
                    .iter()
                    .enumerate()
                    .filter(|(_, iv)| iv.lo >= lo - SLACK && iv.hi <= hi + SLACK)
                    .map(|(k, _)| k)
                    .collect();
                best = Some((
                    gap,
                    Certificate::Surplus {
                        lo,
                        hi,
                        entries,
                        supply: inside,
                        demand,
                    },
                ));
            }
            let meeting = shortage_supply(intervals, weights, lo, hi);
            let gap = demand - meeting;
            if gap > MASS_TOL && best.as_ref().is_none_or(|b| gap > b.0 + MASS_TOL) {
                best = Some((
                    gap,
                    Certificate::Shortage {
                        lo,
                        hi,
                        supply: meeting,
                        demand,
                    },
                ));
            }
        }
    }
    best.map(|b| b.1).unwrap_or(Certificate::Shortage {
        lo: f64::NAN,
        hi: f64::NAN,
        supply: f64::NAN,
        demand: f64::NAN,
    })
}

/// Depth-first search over whole-entry assignments, memoizing dead ends on
/// the quantized remaining demand.
fn whole_assignment(
    intervals: &[QuantileInterval],
    weights: &[f64],
    target: &AtomicDist,
) -> Feasibility {
    let atoms = target.atoms();
    let options: Vec<Vec<usize>> = intervals
        .iter()
        .map(|iv| {
            (0..atoms.len())
                .filter(|&j| atoms[j].0 >= iv.lo - SLACK && atoms[j].0 <= iv.hi + SLACK)
                .collect()
        })
        .collect();
    let mut order: Vec<usize> = (0..intervals.len()).collect();
    order.sort_by(|&a, &b| {
        options[a]
            .len()
            .cmp(&options[b].len())
            .then(weights[b].total_cmp(&weights[a]))
    });

    struct Search<'a> {
        order: &'a [usize],
        options: &'a [Vec<usize>],
        weights: &'a [f64],
        dead: HashSet<(usize, Vec<i64>)>,
        choice: Vec<usize>,
    }

    impl Search<'_> {
        fn key(remaining: &[f64]) -> Vec<i64> {
            remaining
                .iter()
                .map(|r| (r / MASS_TOL).round() as i64)
                .collect()
        }

        fn go(&mut self, depth: usize, remaining: &mut Vec<f64>) -> bool {
            if depth == self.order.len() {
                return remaining.iter().all(|r| r.abs() <= MASS_TOL * 10.0);
            }
            let key = (depth, Self::key(remaining));
            if self.dead.contains(&key) {
                return false;
            }
            let i = self.order[depth];
            let w = self.weights[i];
            for &j in &self.options[i] {
                if remaining[j] + MASS_TOL * 10.0 >= w {
                    remaining[j] -= w;
                    self.choice[i] = j;
                    if self.go(depth + 1, remaining) {
                        return true;
                    }
                    remaining[j] += w;
                }
            }
            self.dead.insert(key);
            false
        }
    }

    let mut s = Search {
        order: &order,
        options: &options,
        weights,
        dead: HashSet::new(),
        choice: vec![usize::MAX; intervals.len()],
    };
    let mut remaining: Vec<f64> = atoms.iter().map(|a| a.1).collect();
    if s.go(0, &mut remaining) {
        let flows = s
            .choice
            .iter()
            .enumerate()
            .map(|(i, &j)| Flow {
                entry: i,
                state: atoms[j].0,
                mass: weights[i],
            })
            .collect();
        Feasibility::Feasible { flows }
    } else {
        Feasibility::Infeasible {
            certificate: Certificate::NoWholeAssignment {
                searched_states: s.dead.len(),
            },
        }
    }
}
