//! Checks on experiments: exact feasibility of finite instances, regret,
//! uniqueness probes, and Monte Carlo simulation.

mod feasibility;
mod probe;
mod regret;
mod simulate;

pub use feasibility::{
    feasibility_check, Certificate, Feasibility, FeasibilityProblem, Flow, Mode, DEFAULT_ENTRY_CAP,
};
pub use probe::{brute_force_implementable, uniqueness_probe, ProbeFailure};
pub use regret::{implemented_sup, regret, RegretReport};
pub use simulate::{simulate, CHUNK};
