//! `quantmatch`: bounds, matching, optimization and verification of
//! implementable distributions of posterior quantiles from the command line.
//!
//! Results go to standard output as JSON and curves to `--out` as CSV. The
//! exit status is 0 on success, 1 when the answer is negative (a target that
//! cannot be implemented, a probe that finds failures, a non-unique
//! implementation) and 2 on bad input.

mod report;

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use quantmatch::experiment::nam_experiment;
use quantmatch::gerrymander::{self, district_plan, seat_share_curve, ElectoralModel};
use quantmatch::plot::{write_curves, write_pairs};
use quantmatch::selection::{pushforward, selection_violation};
use quantmatch::verify::{regret, simulate, uniqueness_probe};
use quantmatch::{
    bayes_residual, is_implementable, ks_distance, matching_experiment, matching_selection, mix,
    optimize_quantile_dist, quantile_bounds, unique_experiment, verify_unique, Cdf, Experiment,
    Objective, ParametricKind, Selection,
};

#[derive(Parser)]
#[command(
    name = "quantmatch",
    version,
    about = "Implementable distributions of posterior quantiles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PriorArgs {
    /// Prior CDF as JSON.
    #[arg(long)]
    prior: PathBuf,
    /// Quantile in (0, 1).
    #[arg(short = 'q', long = "quantile", value_parser = parse_q)]
    q: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Lowest and highest implementable distributions.
    Bounds {
        #[command(flatten)]
        prior: PriorArgs,
        /// CSV of x, F, H_lower, H_upper.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Is a target distribution implementable?
    Check {
        #[command(flatten)]
        prior: PriorArgs,
        #[arg(long)]
        target: PathBuf,
    },
    /// The quantile matching experiment and a sample of its posteriors.
    Matching {
        #[command(flatten)]
        prior: PriorArgs,
        /// Build negative assortative matching instead.
        #[arg(long)]
        nam: bool,
        /// Number of labels at which posteriors are listed.
        #[arg(long, default_value_t = 11)]
        grid: usize,
    },
    /// Implements a target through quantile matching.
    Implement {
        #[command(flatten)]
        prior: PriorArgs,
        #[arg(long)]
        target: PathBuf,
        /// CSV of x, target, pushforward.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Best implementable distribution for an objective.
    Optimize {
        #[command(flatten)]
        prior: PriorArgs,
        /// Objective as JSON.
        #[arg(long)]
        objective: PathBuf,
        /// CSV of x, F, H_star.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Perturbed matching experiment with singleton quantile sets.
    Unique {
        #[command(flatten)]
        prior: PriorArgs,
        #[arg(long)]
        target: PathBuf,
        /// Weight on the prior, in (0, 1].
        #[arg(short = 'e', default_value_t = 0.5)]
        e: f64,
        /// Dyadic refinement level.
        #[arg(short = 'n', default_value_t = 2)]
        n: u32,
        /// Labels sampled by the uniqueness check.
        #[arg(long, default_value_t = 1024)]
        grid: usize,
    },
    /// Regret of an experiment for an objective.
    Regret {
        /// Experiment as JSON.
        #[arg(long)]
        experiment: PathBuf,
        #[arg(long)]
        objective: PathBuf,
        /// Quantile; defaults to the experiment's own.
        #[arg(short = 'q', long = "quantile", value_parser = parse_q)]
        q: Option<f64>,
    },
    /// Checks which H_p an experiment on an atomic prior implements.
    Probe {
        #[arg(long)]
        experiment: PathBuf,
        #[arg(short = 'q', long = "quantile", value_parser = parse_q)]
        q: Option<f64>,
        /// Number of evenly spaced p in [0, 1].
        #[arg(long, default_value_t = 5)]
        grid: usize,
    },
    /// Monte Carlo distribution of selected quantiles.
    Simulate {
        #[arg(long)]
        experiment: PathBuf,
        /// Select by quantile matching toward this target (matching
        /// experiments only). Otherwise the lowest quantile is selected,
        /// which on a unique-implementation experiment is the label.
        #[arg(long)]
        target: Option<PathBuf>,
        /// Quantile for the lowest-quantile selection; defaults to the
        /// experiment's own.
        #[arg(short = 'q', long = "quantile", value_parser = parse_q)]
        q: Option<f64>,
        #[arg(short = 'N', long = "samples", default_value_t = 100_000)]
        samples: usize,
        #[arg(long, env = "QM_SEED", default_value_t = 0)]
        seed: u64,
        /// CSV of x, empirical, exact.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal districting for a voter distribution and a shock.
    Gerrymander {
        #[arg(long)]
        voters: PathBuf,
        #[arg(long)]
        shock: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Points of the seat-share curve.
        #[arg(long, default_value_t = 101)]
        grid: usize,
        /// CSV of rho, share.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prior and implementable bounds over the merged knots and a grid.
    Figure1 {
        #[command(flatten)]
        prior: PriorArgs,
        #[arg(long, default_value_t = 101)]
        grid: usize,
        /// Written to standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Partisan,
    Bipartisan,
    Nonpartisan,
}

impl From<ModeArg> for gerrymander::Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Partisan => gerrymander::Mode::Partisan,
            ModeArg::Bipartisan => gerrymander::Mode::Bipartisan,
            ModeArg::Nonpartisan => gerrymander::Mode::Nonpartisan,
        }
    }
}

fn parse_q(s: &str) -> Result<f64, String> {
    let q: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if q > 0.0 && q < 1.0 {
        Ok(q)
    } else {
        Err(format!("q = {q} must lie in (0, 1)"))
    }
}

/// Input or computation error; reported on stderr with exit status 2.
#[derive(Debug)]
struct Failure(String);

impl From<quantmatch::Error> for Failure {
    fn from(e: quantmatch::Error) -> Self {
        Failure(e.to_string())
    }
}

enum Verdict {
    Positive,
    Negative,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let file = File::open(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    let mut de = serde_json::Deserializer::from_reader(BufReader::new(file));
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let at = e.path().to_string();
        Failure(format!("{}: at `{at}`: {}", path.display(), e.inner()))
    })
}

fn create(path: &Path) -> Result<File, Failure> {
    File::create(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn with_grid(cdf: &Cdf, grid: usize) -> Vec<f64> {
    if grid == 0 {
        Vec::new()
    } else {
        cdf.domain().grid(grid)
    }
}

fn emit(v: Value) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &v).map_err(|e| Failure(e.to_string()))?;
    writeln!(out).map_err(|e| Failure(e.to_string()))
}

fn experiment_q(exp: &Experiment, q: Option<f64>) -> Result<f64, Failure> {
    match (q, exp) {
        (Some(q), _) => Ok(q),
        (None, Experiment::Parametric(p)) => Ok(p.q()),
        (None, Experiment::Finite(_)) => Err(Failure(
            "finite experiments carry no quantile; pass -q".to_string(),
        )),
    }
}

fn run(cmd: Command) -> Result<Verdict, Failure> {
    match cmd {
        Command::Bounds { prior, out } => {
            let f: Cdf = read_json(&prior.prior)?;
            let (lower, upper) = quantile_bounds(&f, prior.q)?;
            if let Some(path) = out {
                write_curves(
                    create(&path)?,
                    &[("F", &f), ("H_lower", &lower), ("H_upper", &upper)],
                    &[],
                )?;
            }
            emit(json!({ "q": prior.q, "lower": lower, "upper": upper }))?;
            Ok(Verdict::Positive)
        }
        Command::Check { prior, target } => {
            let f: Cdf = read_json(&prior.prior)?;
            let h: Cdf = read_json(&target)?;
            let verdict = is_implementable(&h, &f, prior.q)?;
            emit(report::implementability(&verdict))?;
            Ok(if verdict.is_yes() {
                Verdict::Positive
            } else {
                Verdict::Negative
            })
        }
        Command::Matching { prior, nam, grid } => {
            let f: Cdf = read_json(&prior.prior)?;
            let exp = if nam {
                nam_experiment(&f, prior.q)?
            } else {
                matching_experiment(&f, prior.q)?
            };
            let labels = exp.label_domain().grid(grid.max(2));
            let posteriors: Vec<Value> = labels
                .iter()
                .map(|&l| json!({ "label": l, "atoms": exp.posterior_at(l) }))
                .collect();
            let label_law = exp.label_law().clone();
            let exp = Experiment::from(exp);
            let residual = bayes_residual(&exp, 1024)?;
            emit(json!({
                "experiment": exp,
                "label_law": label_law,
                "bayes_residual": residual,
                "posteriors": posteriors,
            }))?;
            Ok(Verdict::Positive)
        }
        Command::Implement { prior, target, out } => {
            let f: Cdf = read_json(&prior.prior)?;
            let h: Cdf = read_json(&target)?;
            let verdict = is_implementable(&h, &f, prior.q)?;
            if !verdict.is_yes() {
                emit(report::implementability(&verdict))?;
                return Ok(Verdict::Negative);
            }
            let exp = Experiment::from(matching_experiment(&f, prior.q)?);
            let sel = matching_selection(&h, &f, prior.q)?;
            let pf = pushforward(&exp, &sel)?;
            if let Some(path) = out {
                write_curves(
                    create(&path)?,
                    &[("target", &h), ("pushforward", &pf.dist)],
                    &[],
                )?;
            }
            emit(json!({
                "implementable": true,
                "experiment": exp,
                "selection": report::selection(&sel),
                "pushforward": pf.dist,
                "ks_to_target": ks_distance(&pf.dist, &h)?,
                "bayes_residual": bayes_residual(&exp, 1024)?,
            }))?;
            Ok(Verdict::Positive)
        }
        Command::Optimize {
            prior,
            objective,
            out,
        } => {
            let f: Cdf = read_json(&prior.prior)?;
            let v: Objective = read_json(&objective)?;
            let opt = optimize_quantile_dist(&v, &f, prior.q)?;
            if let Some(path) = out {
                write_curves(create(&path)?, &[("F", &f), ("H_star", &opt.h_star)], &[])?;
            }
            emit(report::optimum(&opt))?;
            Ok(Verdict::Positive)
        }
        Command::Unique {
            prior,
            target,
            e,
            n,
            grid,
        } => {
            let f: Cdf = read_json(&prior.prior)?;
            let h: Cdf = read_json(&target)?;
            let p = unique_experiment(&h, &f, prior.q, e, n)?;
            let h_n = match p.kind() {
                ParametricKind::UniqueImpl { refinement, .. } => refinement.h_n().clone(),
                _ => unreachable!("unique_experiment builds a perturbed experiment"),
            };
            let induced = mix(&[(1.0 - e, &h_n), (e, &f)])?;
            // every posterior's only q-quantile is its label
            let sel = Selection::identity(&p);
            let mut labels = p.label_breakpoints();
            labels.extend(p.label_domain().grid(grid.max(2)));
            let off_quantile = selection_violation(&p, &sel, &labels)?;
            let exp = Experiment::from(p);
            let verdict = verify_unique(&exp, prior.q, grid)?;
            let pf = pushforward(&exp, &sel)?;
            emit(json!({
                "experiment": exp,
                "verdict": report::unique_verdict(&verdict),
                "selection_off_quantile_at": off_quantile,
                "h_n": h_n,
                "induced": induced,
                "ks_pushforward_to_induced": ks_distance(&pf.dist, &induced)?,
                "ks_induced_to_target": ks_distance(&induced, &h)?,
            }))?;
            Ok(if verdict.is_unique() && off_quantile.is_none() {
                Verdict::Positive
            } else {
                Verdict::Negative
            })
        }
        Command::Regret {
            experiment,
            objective,
            q,
        } => {
            let exp: Experiment = read_json(&experiment)?;
            let v: Objective = read_json(&objective)?;
            let q = experiment_q(&exp, q)?;
            let r = regret(&exp, &v, exp.prior(), q)?;
            emit(json!({
                "opt_value": r.opt_value,
                "implemented_sup": r.implemented_sup,
                "regret": r.regret,
            }))?;
            Ok(Verdict::Positive)
        }
        Command::Probe {
            experiment,
            q,
            grid,
        } => {
            let exp: Experiment = read_json(&experiment)?;
            let q = experiment_q(&exp, q)?;
            let ps: Vec<f64> = match grid {
                0 => Vec::new(),
                1 => vec![0.5],
                k => (0..k).map(|i| i as f64 / (k - 1) as f64).collect(),
            };
            let failures = uniqueness_probe(&exp, q, &ps)?;
            let listed: Vec<Value> = failures
                .iter()
                .map(|fl| json!({ "p": fl.p, "certificate": report::certificate(&fl.certificate) }))
                .collect();
            emit(json!({ "q": q, "p_grid": ps, "failures": listed }))?;
            Ok(if failures.is_empty() {
                Verdict::Positive
            } else {
                Verdict::Negative
            })
        }
        Command::Simulate {
            experiment,
            target,
            q,
            samples,
            seed,
            out,
        } => {
            let exp: Experiment = read_json(&experiment)?;
            let sel = match (&target, &exp) {
                (Some(path), Experiment::Parametric(p))
                    if matches!(p.kind(), ParametricKind::Matching) =>
                {
                    let h: Cdf = read_json(path)?;
                    matching_selection(&h, p.prior(), p.q())?
                }
                (Some(_), _) => {
                    return Err(Failure("--target needs a matching experiment".to_string()))
                }
                (None, Experiment::Parametric(p))
                    if matches!(p.kind(), ParametricKind::UniqueImpl { .. }) =>
                {
                    Selection::identity(p)
                }
                (None, _) => Selection::LowestQuantile {
                    q: experiment_q(&exp, q)?,
                },
            };
            let emp = simulate(&exp, &sel, samples, seed)?;
            let exact = pushforward(&exp, &sel)?;
            let ks = ks_distance(&emp, &exact.dist)?;
            if let Some(path) = out {
                write_curves(
                    create(&path)?,
                    &[("empirical", &emp), ("exact", &exact.dist)],
                    &[],
                )?;
            }
            emit(json!({
                "samples": samples,
                "seed": seed,
                "ks_to_exact": ks,
                "ks_bound": 1.63 / (samples as f64).sqrt(),
                "exact_resolution": exact.resolution,
                "empirical": emp,
            }))?;
            Ok(Verdict::Positive)
        }
        Command::Gerrymander {
            voters,
            shock,
            mode,
            grid,
            out,
        } => {
            let f: Cdf = read_json(&voters)?;
            let r: Cdf = read_json(&shock)?;
            let model = ElectoralModel::new(f, r)?;
            let plan = district_plan(&model, mode.into())?;
            let curve = seat_share_curve(plan.h_star(), grid);
            if let Some(path) = out {
                write_pairs(create(&path)?, ["rho", "share"], &curve)?;
            }
            emit(json!({
                "mode": plan.mode.name(),
                "objective": plan.objective,
                "h_star": plan.optimum.h_star,
                "value": plan.optimum.value,
                "unique": plan.optimum.is_unique(),
                "expected_seat_share": plan.expected_seat_share,
                "experiment": Experiment::from(plan.experiment.clone()),
                "selection": report::selection(&plan.selection),
            }))?;
            Ok(Verdict::Positive)
        }
        Command::Figure1 { prior, grid, out } => {
            let f: Cdf = read_json(&prior.prior)?;
            let (lower, upper) = quantile_bounds(&f, prior.q)?;
            let curves = [("F", &f), ("H_lower", &lower), ("H_upper", &upper)];
            let extra = with_grid(&f, grid);
            match out {
                Some(path) => {
                    write_curves(create(&path)?, &curves, &extra)?;
                    emit(json!({ "out": path.display().to_string(), "q": prior.q }))?;
                }
                None => write_curves(std::io::stdout().lock(), &curves, &extra)?,
            }
            Ok(Verdict::Positive)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Verdict::Positive) => ExitCode::SUCCESS,
        Ok(Verdict::Negative) => ExitCode::from(1),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
