use proptest::prelude::*;

use quantmatch::verify::{feasibility_check, Feasibility, FeasibilityProblem, Mode};
use quantmatch::{AtomicDist, Cdf, Domain, FiniteEntry, FiniteExperiment};

const GRID: f64 = 8.0;

/// Max flow by repeated BFS augmentation on a dense capacity matrix.
fn max_flow(cap: &mut [Vec<f64>], s: usize, t: usize) -> f64 {
    let n = cap.len();
    let mut total = 0.0;
    loop {
        let mut prev = vec![usize::MAX; n];
        prev[s] = s;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if prev[v] == usize::MAX && cap[u][v] > 1e-12 {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[t] == usize::MAX {
            return total;
        }
        let mut push = f64::INFINITY;
        let mut v = t;
        while v != s {
            push = push.min(cap[prev[v]][v]);
            v = prev[v];
        }
        let mut v = t;
        while v != s {
            cap[prev[v]][v] -= push;
            cap[v][prev[v]] += push;
            v = prev[v];
        }
        total += push;
    }
}

fn flow_feasible(exp: &FiniteExperiment, target: &AtomicDist, q: f64) -> bool {
    let m = exp.entries().len();
    let k = target.atoms().len();
    let (s, t) = (m + k, m + k + 1);
    let mut cap = vec![vec![0.0; m + k + 2]; m + k + 2];
    for (i, e) in exp.entries().iter().enumerate() {
        cap[s][i] = e.weight;
        let iv = e.posterior.quantile_interval(q);
        for (j, &(x, _)) in target.atoms().iter().enumerate() {
            if iv.contains(x, 1e-9) {
                cap[i][m + j] = f64::INFINITY;
            }
        }
    }
    for (j, &(_, mass)) in target.atoms().iter().enumerate() {
        cap[m + j][t] = mass;
    }
    max_flow(&mut cap, s, t) > 1.0 - 1e-9
}

/// Whole entries sent to atoms inside their intervals, matching every mass.
fn whole_feasible(exp: &FiniteExperiment, target: &AtomicDist, q: f64) -> bool {
    fn go(
        i: usize,
        exp: &FiniteExperiment,
        target: &AtomicDist,
        q: f64,
        left: &mut Vec<f64>,
    ) -> bool {
        if i == exp.entries().len() {
            return left.iter().all(|r| r.abs() < 1e-9);
        }
        let e = &exp.entries()[i];
        let iv = e.posterior.quantile_interval(q);
        for (j, &(x, _)) in target.atoms().iter().enumerate() {
            if iv.contains(x, 1e-9) && left[j] >= e.weight - 1e-9 {
                left[j] -= e.weight;
                if go(i + 1, exp, target, q, left) {
                    return true;
                }
                left[j] += e.weight;
            }
        }
        false
    }
    let mut left: Vec<f64> = target.atoms().iter().map(|a| a.1).collect();
    go(0, exp, target, q, &mut left)
}

fn on_grid(v: Vec<(u8, u8)>) -> AtomicDist {
    let total: f64 = v.iter().map(|a| a.1 as f64).sum();
    AtomicDist::new(
        v.into_iter()
            .map(|(x, w)| (x as f64 / GRID, w as f64 / total))
            .collect(),
    )
    .unwrap()
}

fn atoms(max: usize) -> impl Strategy<Value = AtomicDist> {
    prop::collection::vec((0u8..=8, 1u8..=4), 1..=max).prop_map(on_grid)
}

fn experiment(max_entries: usize) -> impl Strategy<Value = FiniteExperiment> {
    prop::collection::vec((atoms(3), 1u8..=3), 1..=max_entries).prop_map(|entries| {
        let total: f64 = entries.iter().map(|e| e.1 as f64).sum();
        let entries = entries
            .into_iter()
            .enumerate()
            .map(|(i, (posterior, w))| FiniteEntry {
                label: i as f64,
                weight: w as f64 / total,
                posterior,
            })
            .collect();
        FiniteExperiment::new(Cdf::uniform(Domain::unit()), entries).unwrap()
    })
}

fn quantile() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.5), Just(0.25), Just(2.0 / 3.0), 0.1..0.9f64]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn fractional_agrees_with_max_flow(exp in experiment(6), target in atoms(4), q in quantile()) {
        let prob = FeasibilityProblem::new(exp.clone(), target.clone(), Mode::Fractional);
        let got = feasibility_check(&prob, q).unwrap();
        prop_assert_eq!(got.is_feasible(), flow_feasible(&exp, &target, q));
        match got {
            Feasibility::Feasible { flows } => {
                for (i, e) in exp.entries().iter().enumerate() {
                    let iv = e.posterior.quantile_interval(q);
                    let sent: f64 = flows.iter().filter(|f| f.entry == i).map(|f| f.mass).sum();
                    prop_assert!((sent - e.weight).abs() < 1e-9);
                    for f in flows.iter().filter(|f| f.entry == i) {
                        prop_assert!(iv.contains(f.state, 1e-9));
                    }
                }
                for &(x, mass) in target.atoms() {
                    let got: f64 = flows.iter().filter(|f| f.state == x).map(|f| f.mass).sum();
                    prop_assert!((got - mass).abs() < 1e-9);
                }
            }
            Feasibility::Infeasible { certificate } => {
                prop_assert!(certificate.is_valid(&exp, &target, q));
            }
        }
    }

    #[test]
    fn deterministic_agrees_with_enumeration(exp in experiment(5), target in atoms(3), q in quantile()) {
        let prob = FeasibilityProblem::new(exp.clone(), target.clone(), Mode::Deterministic);
        let got = feasibility_check(&prob, q).unwrap();
        prop_assert_eq!(got.is_feasible(), whole_feasible(&exp, &target, q));
        if let Feasibility::Feasible { flows } = got {
            // one whole flow per entry
            prop_assert_eq!(flows.len(), exp.entries().len());
        }
    }

    #[test]
    fn whole_feasible_implies_fractional(exp in experiment(5), target in atoms(3), q in quantile()) {
        let det = feasibility_check(&FeasibilityProblem::new(exp.clone(), target.clone(), Mode::Deterministic), q).unwrap();
        let frac = feasibility_check(&FeasibilityProblem::new(exp, target, Mode::Fractional), q).unwrap();
        prop_assert!(!det.is_feasible() || frac.is_feasible());
    }
}
