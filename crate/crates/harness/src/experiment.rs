//! Seed-parallel experiment execution and artifact writing.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use shufflesgd::optimizer::{Divergence, DEFAULT_AUDIT_TOLERANCE};
use shufflesgd::problems::estimate_constants;
use shufflesgd::schedules::{preset, validate, ValidityReport};
use shufflesgd::{run, Config, InitialPoint, ProblemConstants, RunResult, Schedule, ShuffleKind};

use crate::config::{ExperimentConfig, InitSpec, ScheduleGrid};
use crate::error::{HarnessError, Result};
use crate::problem::{load_problem, LoadedProblem};
use crate::records::{aggregate, write_rows, AggregateRow, ResultRow};

/// `run` executes the full grid; `compare` gives every strategy a group and IG a single run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Grid,
    Compare,
}

/// One learning-rate setting of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleCell {
    pub alpha: f64,
    pub gamma_over_n: f64,
    pub schedule: Schedule,
    /// Validity against the certified constants.
    pub validity: ValidityReport<f64>,
    /// Validity against the fitted constants.
    pub validity_estimated: ValidityReport<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSummary {
    pub n: usize,
    pub d: usize,
    pub test_rows: Option<usize>,
    pub optimal_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub strategy: String,
    pub alpha: f64,
    pub gamma_over_n: f64,
    pub seed: u64,
    pub epochs_completed: usize,
    pub divergence: Option<Divergence>,
    pub audit_applicable: usize,
    pub audit_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub mode: Mode,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub problem: ProblemSummary,
    /// Fitted from probe points.
    pub constants_estimated: ProblemConstants,
    /// Variance constants valid at every point; used for audits.
    pub constants_certified: ProblemConstants,
    pub cells: Vec<ScheduleCell>,
    pub runs: Vec<RunSummary>,
}

/// A completed run with its grid coordinates.
pub struct RunOutcome {
    pub strategy: ShuffleKind,
    pub cell: usize,
    pub result: RunResult,
}

pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub aggregates: Vec<AggregateRow>,
    pub manifest: Manifest,
    pub runs: Vec<RunOutcome>,
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFiles {
    pub runs: PathBuf,
    pub aggregate: PathBuf,
    pub manifest: PathBuf,
}

fn initial_point(spec: &InitSpec, d: usize) -> Vec<f64> {
    match spec {
        InitSpec::Zero => vec![0.0; d],
        InitSpec::Uniform { radius, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..d).map(|_| rng.gen_range(-radius..=*radius)).collect()
        }
    }
}

/// Fitted constants (probes at `w0`, the origin and eight seeded points of `[-1, 1]^d`)
/// and their certified counterpart.
pub fn problem_constants(problem: &LoadedProblem, w0: &[f64]) -> Result<(ProblemConstants, ProblemConstants)> {
    let obj = problem.objective();
    let d = obj.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e37);
    let mut probes = vec![w0.to_vec(), vec![0.0; d]];
    probes.extend((0..8).map(|_| (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect()));
    let estimated = estimate_constants(obj, &probes)?;
    let (theta_hat, sigma_sq_hat) = problem.variance_constants();
    let certified = ProblemConstants { theta_hat, sigma_sq_hat, estimated: false, ..estimated.clone() };
    Ok((estimated, certified))
}

fn schedule_cells(
    cfg: &ExperimentConfig,
    n: usize,
    certified: &ProblemConstants,
    estimated: &ProblemConstants,
) -> Result<Vec<ScheduleCell>> {
    let nn = n as f64;
    let schedules: Vec<(f64, f64, Schedule)> = match &cfg.schedules {
        ScheduleGrid::Grid { alphas, gamma_over_n, beta } => {
            let mut out = Vec::new();
            for &alpha in alphas {
                for &g in gamma_over_n {
                    let s =
                        if alpha == 0.0 { Schedule::constant(g * nn)? } else { Schedule::poly(g * nn, *beta, alpha)? };
                    out.push((alpha, g, s));
                }
            }
            out
        }
        ScheduleGrid::Preset { preset: p, args } => {
            let s = preset(*p, certified, cfg.epochs, n, args)?;
            let (alpha, gamma) = match s.poly_params() {
                Some((g, _, a)) => (a, g),
                None => (0.0, s.eta_at(1)),
            };
            vec![(alpha, gamma / nn, s)]
        }
    };
    Ok(schedules
        .into_iter()
        .map(|(alpha, gamma_over_n, schedule)| ScheduleCell {
            alpha,
            gamma_over_n,
            validity: validate(&schedule, certified, cfg.epochs, n),
            validity_estimated: validate(&schedule, estimated, cfg.epochs, n),
            schedule,
        })
        .collect())
}

pub fn run_id(strategy: &ShuffleKind, alpha: f64, gamma_over_n: f64, seed: u64) -> String {
    format!("{}-a{alpha}-g{gamma_over_n}-s{seed}", strategy.label())
}

struct Job {
    strategy: ShuffleKind,
    cell: usize,
    seed: u64,
}

/// Runs the configuration in memory. Output order is fixed by the config, independent of `workers`.
pub fn execute(cfg: &ExperimentConfig, mode: Mode, workers: Option<usize>) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let problem = load_problem(&cfg.problem)?;
    execute_on(cfg, &problem, mode, workers)
}

/// As [`execute`], on an already loaded problem.
pub fn execute_on(
    cfg: &ExperimentConfig,
    problem: &LoadedProblem,
    mode: Mode,
    workers: Option<usize>,
) -> Result<ExperimentOutput> {
    let obj = problem.objective();
    let n = obj.n();
    let w0 = initial_point(&cfg.init, obj.dim());
    let (estimated, certified) = problem_constants(problem, &w0)?;
    let cells = schedule_cells(cfg, n, &certified, &estimated)?;

    let mut jobs = Vec::new();
    for strategy in &cfg.strategies {
        let seeds = match (mode, strategy) {
            (Mode::Compare, ShuffleKind::IncrementalGradient) => &cfg.seeds[..1],
            _ => &cfg.seeds[..],
        };
        for cell in 0..cells.len() {
            for &seed in seeds {
                jobs.push(Job { strategy: strategy.clone(), cell, seed });
            }
        }
    }

    let is_logistic = problem.test_rows().is_some();
    let run_job = |job: &Job| -> Result<(RunOutcome, Vec<ResultRow>)> {
        let c = &cells[job.cell];
        let mut oc = Config::new(cfg.epochs, c.schedule, job.strategy.clone())?
            .with_init(InitialPoint::Given(w0.clone()))
            .with_recorded_weights(is_logistic);
        if cfg.audit {
            oc = oc.with_audit(certified.clone());
        }
        let mut result = run(obj, &oc, job.seed)?;
        let id = run_id(&job.strategy, c.alpha, c.gamma_over_n, job.seed);
        let diverged_at = result.divergence.map(|d| d.epoch);
        let rows = result
            .traces
            .iter_mut()
            .zip(&result.wall_ms)
            .map(|(tr, &wall)| {
                let acc = tr.w_tilde.take().and_then(|w| problem.test_accuracy(&w));
                ResultRow {
                    run_id: id.clone(),
                    strategy: job.strategy.label().to_owned(),
                    alpha: c.alpha,
                    gamma_over_n: c.gamma_over_n,
                    seed: job.seed,
                    epoch: tr.t,
                    eta_t: tr.eta_t,
                    train_loss: tr.metrics.f_val,
                    grad_norm_sq: tr.metrics.grad_norm_sq,
                    test_accuracy: acc,
                    dist_sq: tr.metrics.dist_sq,
                    wall_ms: wall,
                    diverged_at,
                }
            })
            .collect();
        Ok((RunOutcome { strategy: job.strategy.clone(), cell: job.cell, result }, rows))
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.or(cfg.workers).unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let done: Vec<(RunOutcome, Vec<ResultRow>)> =
        pool.install(|| jobs.par_iter().map(run_job).collect::<Result<Vec<_>>>())?;

    if let Some(first) = done.first() {
        if done.iter().any(|(o, _)| o.result.initial_w != first.0.result.initial_w) {
            return Err(HarnessError::Config("runs do not share the initial point".into()));
        }
    }

    let mut rows = Vec::new();
    let mut runs = Vec::new();
    let mut summaries = Vec::new();
    for (outcome, r) in done {
        let c = &cells[outcome.cell];
        let audit = &outcome.result.audit;
        summaries.push(RunSummary {
            run_id: run_id(&outcome.strategy, c.alpha, c.gamma_over_n, outcome.result.seed),
            strategy: outcome.strategy.label().to_owned(),
            alpha: c.alpha,
            gamma_over_n: c.gamma_over_n,
            seed: outcome.result.seed,
            epochs_completed: outcome.result.traces.len(),
            divergence: outcome.result.divergence,
            audit_applicable: audit.entries.iter().filter(|e| e.applicable).count(),
            audit_violations: audit.violations(DEFAULT_AUDIT_TOLERANCE).len(),
        });
        rows.extend(r);
        runs.push(outcome);
    }
    let manifest = Manifest {
        name: cfg.name.clone(),
        mode,
        config_hash: cfg.hash(),
        config: cfg.clone(),
        problem: ProblemSummary { n, d: obj.dim(), test_rows: problem.test_rows(), optimal_value: obj.optimal_value() },
        constants_estimated: estimated,
        constants_certified: certified,
        cells,
        runs: summaries,
    };
    Ok(ExperimentOutput { aggregates: aggregate(&rows), rows, manifest, runs })
}

/// Writes `<name>[_compare]_runs.csv`, `_aggregate.csv` and `_manifest.json` into `dir`.
pub fn write_outputs(out: &ExperimentOutput, dir: &Path) -> Result<OutputFiles> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let stem = match out.manifest.mode {
        Mode::Grid => out.manifest.name.clone(),
        Mode::Compare => format!("{}_compare", out.manifest.name),
    };
    let files = OutputFiles {
        runs: dir.join(format!("{stem}_runs.csv")),
        aggregate: dir.join(format!("{stem}_aggregate.csv")),
        manifest: dir.join(format!("{stem}_manifest.json")),
    };
    let create = |p: &Path| fs::File::create(p).map_err(|e| HarnessError::io(p, e));
    write_rows(&out.rows, create(&files.runs)?)?;
    write_rows(&out.aggregates, create(&files.aggregate)?)?;
    let mut json = serde_json::to_string_pretty(&out.manifest)?;
    json.push('\n');
    fs::write(&files.manifest, json).map_err(|e| HarnessError::io(&files.manifest, e))?;
    Ok(files)
}

fn resolve_dir(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> PathBuf {
    out_dir.map(Path::to_path_buf).or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("results"))
}

/// Runs the full grid and writes its artifacts. `out_dir` overrides the config's directory.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>, workers: Option<usize>) -> Result<OutputFiles> {
    let out = execute(cfg, Mode::Grid, workers)?;
    write_outputs(&out, &resolve_dir(cfg, out_dir))
}

/// One result group per strategy from a shared initial point; IG runs once.
pub fn compare_strategies(
    cfg: &ExperimentConfig,
    out_dir: Option<&Path>,
    workers: Option<usize>,
) -> Result<OutputFiles> {
    let out = execute(cfg, Mode::Compare, workers)?;
    write_outputs(&out, &resolve_dir(cfg, out_dir))
}
