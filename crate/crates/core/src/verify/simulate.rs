//! Monte Carlo draws of selected quantiles.
//!
//! Draws are split into chunks of [`CHUNK`]; chunk `c` uses the ChaCha
//! stream `c` of the seed, so the output does not depend on how chunks are
//! scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dist::{AtomicDist, Cdf};
use crate::error::{Error, Result};
use crate::experiment::{Experiment, ParametricExperiment, ParametricKind};
use crate::selection::Selection;

/// Draws per seeded chunk.
pub const CHUNK: usize = 1 << 16;

fn draw_label(exp: &ParametricExperiment, rng: &mut ChaCha8Rng) -> f64 {
    match exp.kind() {
        ParametricKind::UniqueImpl { refinement, e, .. } => {
            let from_prior = rng.gen::<f64>() < *e;
            let u = rng.gen::<f64>();
            if from_prior {
                exp.prior().gen_inverse(u)
            } else {
                refinement.h_n().gen_inverse(u)
            }
        }
        _ => exp.label_law().gen_inverse(rng.gen::<f64>()),
    }
}

/// Empirical distribution of `χ(G)` over `n` independent draws.
pub fn simulate(exp: &Experiment, sel: &Selection, n: usize, seed: u64) -> Result<Cdf> {
    if n == 0 {
        return Err(Error::precondition("simulate needs at least one draw"));
    }
    let chunks = n.div_ceil(CHUNK);
    let cumulative: Vec<f64> = match exp {
        Experiment::Finite(f) => f
            .entries()
            .iter()
            .scan(0.0, |acc, e| {
                *acc += e.weight;
                Some(*acc)
            })
            .collect(),
        Experiment::Parametric(_) => Vec::new(),
    };
    let parts: Vec<Result<Vec<f64>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(n - c * CHUNK);
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                let x = match exp {
                    Experiment::Finite(f) => {
                        let u = rng.gen::<f64>();
                        let i = cumulative
                            .partition_point(|&w| w <= u)
                            .min(f.entries().len() - 1);
                        let e = &f.entries()[i];
                        sel.select_entry(i, e.label, &e.posterior)?
                    }
                    Experiment::Parametric(p) => sel.select_label(p, draw_label(p, &mut rng))?,
                };
                out.push(x);
            }
            Ok(out)
        })
        .collect();
    let mut samples = Vec::with_capacity(n);
    for part in parts {
        samples.extend(part?);
    }
    empirical(&samples, exp.prior())
}

/// The empirical CDF of `samples` on the prior's domain.
pub fn empirical(samples: &[f64], prior: &Cdf) -> Result<Cdf> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        atoms.push((prior.domain().clamp(sorted[i]), (j - i) as f64 / n));
        i = j;
    }
    AtomicDist::new(atoms)?.to_cdf(prior.domain())
}
