//! Acceptance criteria 1 to 12 with their tolerances and runtime limits.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shufflesgd::analysis::{
    elementary_inequalities_suite, fit_loglog_slope, verify_averaged_bound, verify_recursion_bound, AveragedParams,
    RecursionParams, StepRule, ZPolicy,
};
use shufflesgd::optimizer::{audit_rr_expectation, AuditCheck, PermutationSampling};
use shufflesgd::shuffling::verify_rr_identity;
use shufflesgd::{Preset, PresetArgs, ProblemConstants, ShuffleKind};

use crate::config::{ExperimentConfig, InitSpec, ProblemSpec, ScheduleGrid};
use crate::experiment::{execute, execute_on, write_outputs, ExperimentOutput, Mode};
use crate::problem::{load_problem, LoadedProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIPPED",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    /// Criterion number, with a suffix for dataset variants.
    pub id: String,
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
    pub seconds: f64,
    pub limit_seconds: f64,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{:<7}] {:>3}  {:<34} {:>7.2}s / {:>3}s  {}",
            self.status.to_string(),
            self.id,
            self.name,
            self.seconds,
            self.limit_seconds,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    /// Directory searched for `w8a` / `w8a.t` (optionally `.gz`).
    pub data_dir: Option<PathBuf>,
    /// Run only these criterion numbers.
    pub only: Option<Vec<u32>>,
    /// Replace the primary tolerance of one criterion.
    pub tolerance_override: Option<(u32, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub results: Vec<CriterionResult>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.status != Status::Fail)
    }

    pub fn failed(&self) -> Vec<&CriterionResult> {
        self.results.iter().filter(|r| r.status == Status::Fail).collect()
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.results {
            writeln!(f, "{r}")?;
        }
        let pass = self.results.iter().filter(|r| r.status == Status::Pass).count();
        let skip = self.results.iter().filter(|r| r.status == Status::Skipped).count();
        write!(f, "{pass} passed, {} failed, {skip} skipped", self.failed().len())
    }
}

struct Ctx {
    data_dir: PathBuf,
    tolerance_override: Option<(u32, f64)>,
}

impl Ctx {
    fn tol(&self, id: u32, default: f64) -> f64 {
        match self.tolerance_override {
            Some((k, t)) if k == id => t,
            _ => default,
        }
    }

    fn dataset_file(&self, stem: &str) -> Option<PathBuf> {
        [stem.to_owned(), format!("{stem}.gz")].into_iter().map(|f| self.data_dir.join(f)).find(|p| p.is_file())
    }

    /// Logistic problem from a seeded `w8a` subsample, or `None` when the file is absent.
    fn w8a(&self, max_rows: usize) -> Option<ProblemSpec> {
        Some(ProblemSpec::Libsvm {
            path: self.dataset_file("w8a")?,
            test_path: self.dataset_file("w8a.t"),
            lambda: 0.01,
            max_rows: Some(max_rows),
            subsample_seed: 0,
            test_fraction: 0.2,
            split_seed: 0,
            scale: true,
        })
    }
}

/// Outcome of one criterion body: pass flag and a one-line detail.
type Outcome = (bool, String);

/// Named variants of one criterion; `None` marks a skipped variant.
type Variants = Vec<(String, Option<Outcome>)>;

fn outcome(ok: bool, detail: String) -> Outcome {
    (ok, detail)
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: f64,
    body: fn(&Ctx) -> Variants,
}

const CRITERIA: [Criterion; 12] = [
    Criterion { id: 1, name: "gradient correctness", limit: 5.0, body: c1_gradients },
    Criterion { id: 2, name: "without-replacement identity", limit: 5.0, body: c2_identity },
    Criterion { id: 3, name: "recursion bound domination", limit: 30.0, body: c3_recursion },
    Criterion { id: 4, name: "averaged recursion bound", limit: 30.0, body: c4_averaged },
    Criterion { id: 5, name: "elementary inequalities", limit: 5.0, body: c5_elementary },
    Criterion { id: 6, name: "per-epoch descent audit", limit: 60.0, body: c6_audit },
    Criterion { id: 7, name: "reshuffling expectation bounds", limit: 60.0, body: c7_expectation },
    Criterion { id: 8, name: "strongly convex rate", limit: 60.0, body: c8_rate },
    Criterion { id: 9, name: "reshuffling beats cyclic order", limit: 60.0, body: c9_rr_vs_ig },
    Criterion { id: 10, name: "nonconvex schedule ordering", limit: 120.0, body: c10_ordering },
    Criterion { id: 11, name: "slope fitter calibration", limit: 1.0, body: c11_slope },
    Criterion { id: 12, name: "reproducibility", limit: 30.0, body: c12_reproducibility },
];

/// Runs the selected criteria. Dataset variants without their files are `SKIPPED`.
pub fn acceptance_suite(opts: &SuiteOptions) -> SuiteReport {
    let ctx = Ctx {
        data_dir: opts
            .data_dir
            .clone()
            .or_else(|| std::env::var_os("SHUFFLESGD_DATA").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("data")),
        tolerance_override: opts.tolerance_override,
    };
    let mut results = Vec::new();
    for c in CRITERIA.iter().filter(|c| opts.only.as_ref().is_none_or(|o| o.contains(&c.id))) {
        let start = Instant::now();
        let parts = (c.body)(&ctx);
        let seconds = start.elapsed().as_secs_f64();
        for (suffix, out) in parts {
            let (status, detail) = match out {
                None => (Status::Skipped, suffix.clone()),
                Some((ok, detail)) if seconds > c.limit => {
                    let _ = ok;
                    (Status::Fail, format!("runtime limit exceeded; {detail}"))
                }
                Some((true, detail)) => (Status::Pass, detail),
                Some((false, detail)) => (Status::Fail, detail),
            };
            let id = if status == Status::Skipped || suffix.is_empty() {
                if status == Status::Skipped {
                    format!("{}d", c.id)
                } else {
                    c.id.to_string()
                }
            } else {
                format!("{}{}", c.id, suffix)
            };
            results.push(CriterionResult { id, name: c.name, status, detail, seconds, limit_seconds: c.limit });
        }
    }
    SuiteReport { results }
}

fn single(o: Outcome) -> Variants {
    vec![(String::new(), Some(o))]
}

fn skipped_dataset() -> (String, Option<Outcome>) {
    ("w8a variant: dataset file not found".to_owned(), None)
}

fn synthetic_logistic(n: usize, d: usize, seed: u64) -> ProblemSpec {
    ProblemSpec::SyntheticLogistic { n, d, density: 0.04, label_noise: 0.05, seed, lambda: 0.01, test_fraction: 0.2 }
}

fn quadratic(n: usize, d: usize, curvature: (f64, f64), seed: u64) -> ProblemSpec {
    ProblemSpec::Quadratic { n, d, curvature, spread: 1.0, seed }
}

fn load(spec: &ProblemSpec) -> Result<LoadedProblem, String> {
    load_problem(spec).map_err(|e| e.to_string())
}

fn central_difference(p: &LoadedProblem, w: &[f64], i: usize) -> Vec<f64> {
    let obj = p.objective();
    let h = 1e-5;
    let mut x = w.to_vec();
    (0..w.len())
        .map(|j| {
            x[j] = w[j] + h;
            let fp = obj.comp_value(&x, i).expect("valid index");
            x[j] = w[j] - h;
            let fm = obj.comp_value(&x, i).expect("valid index");
            x[j] = w[j];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

fn worst_gradient_error(p: &LoadedProblem, pairs: usize, seed: u64) -> f64 {
    let obj = p.objective();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let i = rng.gen_range(0..obj.n());
        let w: Vec<f64> = (0..obj.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let g = obj.comp_grad(&w, i).expect("valid index");
        let fd = central_difference(p, &w, i);
        let err: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = fd.iter().map(|b| b * b).sum::<f64>().sqrt().max(1e-8);
        worst = worst.max(err / scale);
    }
    worst
}

fn c1_gradients(ctx: &Ctx) -> Variants {
    let tol = ctx.tol(1, 1e-6);
    let logistic_spec = ctx.w8a(1_000).unwrap_or_else(|| synthetic_logistic(1_250, 300, 11));
    let run = || -> Result<Outcome, String> {
        let lg = load(&logistic_spec)?;
        let qd = load(&quadratic(100, 10, (-0.5, 2.0), 3))?;
        let (el, eq) = (worst_gradient_error(&lg, 100, 1), worst_gradient_error(&qd, 100, 2));
        Ok(outcome(
            el <= tol && eq <= tol,
            format!("max rel err logistic {el:.2e}, quadratic {eq:.2e} (tol {tol:.0e})"),
        ))
    };
    single(run().unwrap_or_else(|e| (false, e)))
}

fn c2_identity(ctx: &Ctx) -> Variants {
    let tol = ctx.tol(2, 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for _ in 0..50 {
        for n in 2..=6usize {
            let values: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            for k in 1..=n {
                match verify_rr_identity(&values, k) {
                    Ok(r) if r.exhaustive => worst = worst.max(r.abs_gap),
                    _ => worst = f64::INFINITY,
                }
                cases += 1;
            }
        }
    }
    single(outcome(worst <= tol, format!("{cases} exhaustive cases, max |gap| {worst:.2e} (tol {tol:.0e})")))
}

fn c3_recursion(ctx: &Ctx) -> Variants {
    let tol = ctx.tol(3, 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = f64::INFINITY;
    let mut random_violations = 0;
    let mut errors = 0;
    for k in 0..1_000u64 {
        let q: u32 = rng.gen_range(1..=3);
        let rho = rng.gen_range(0.05..2.0);
        let step = if k % 2 == 0 {
            let lo = (q as f64 - 1.0).max(1.0);
            StepRule::Diminishing { beta: rng.gen_range(lo..lo + 20.0) }
        } else {
            StepRule::Constant { eta: rng.gen_range(0.01..0.99) / rho }
        };
        let p = RecursionParams { rho, d: rng.gen_range(0.0..5.0), q, step };
        match verify_recursion_bound(&p, rng.gen_range(0.0..10.0), 10_000, 1, k) {
            Ok(r) => {
                worst = worst.min(r.min_rel_slack);
                random_violations += r.random_violations;
            }
            Err(_) => errors += 1,
        }
    }
    let ok = worst >= -tol && random_violations == 0 && errors == 0;
    single(outcome(
        ok,
        format!("1000 draws to T=1e4, min rel slack {worst:.2e}, {random_violations} random-sequence violations"),
    ))
}

fn averaged_draw(rng: &mut ChaCha8Rng, branch: bool) -> AveragedParams<f64> {
    let (m, q, alpha) = if branch {
        let q = rng.gen_range(3..=4u32);
        (1, q, 1.0 / (q - 1) as f64)
    } else {
        let m = rng.gen_range(1..=2u32);
        (m, rng.gen_range(m + 1..=m + 3), rng.gen_range(0.05..0.5 / m as f64))
    };
    let beta = rng.gen_range(0.5..5.0);
    let am = alpha * m as f64;
    let floor = beta - 1.0 + (1.0 - am) * (am / (1.0 - am)).exp();
    AveragedParams {
        rho: rng.gen_range(0.1..2.0),
        d: rng.gen_range(0.0..5.0),
        m,
        q,
        gamma: rng.gen_range(0.1..2.0),
        beta,
        alpha,
        c: rng.gen_range(0.0..3.0),
        h: rng.gen_range(0.0..2.0),
        theta: floor + rng.gen_range(0.01..2.0),
        y1: rng.gen_range(0.0..5.0),
    }
}

fn c4_averaged(ctx: &Ctx) -> Variants {
    let tol = ctx.tol(4, 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::INFINITY;
    let (mut branch_draws, mut errors) = (0, 0);
    for k in 0..500u64 {
        let branch = k % 3 == 0;
        branch_draws += usize::from(branch);
        let p = averaged_draw(&mut rng, branch);
        let policy = match k % 3 {
            0 => ZPolicy::Maximal,
            1 => ZPolicy::Uniform { seed: k },
            _ => ZPolicy::Zero,
        };
        match verify_averaged_bound(&p, 10_000, policy) {
            Ok(r) => worst = worst.min((r.bound.total - r.average_z) / r.bound.total.abs().max(f64::MIN_POSITIVE)),
            Err(_) => errors += 1,
        }
    }
    single(outcome(
        worst >= -tol && errors == 0,
        format!("500 draws ({branch_draws} on the log branch), min rel slack {worst:.2e}, {errors} errors"),
    ))
}

fn c5_elementary(ctx: &Ctx) -> Variants {
    let allowed = ctx.tol(5, 0.0);
    let r = elementary_inequalities_suite(10_000, 5);
    let total = r.power_difference_violations + r.monotone_ratio_violations + r.integral_violations;
    single(outcome(
        total as f64 <= allowed,
        format!(
            "{} draws, violations: power {} ratio {} integral {}",
            r.draws, r.power_difference_violations, r.monotone_ratio_violations, r.integral_violations
        ),
    ))
}

fn audit_config(name: &str, problem: ProblemSpec, schedules: ScheduleGrid, epochs: usize) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        problem,
        strategies: vec![ShuffleKind::RandomReshuffle, ShuffleKind::ShuffleOnce, ShuffleKind::IncrementalGradient],
        schedules,
        epochs,
        seeds: (0..10).collect(),
        init: InitSpec::Zero,
        audit: true,
        output_dir: None,
        workers: None,
    }
}

fn audit_summary(out: &ExperimentOutput, tol: f64) -> Outcome {
    let cell = &out.manifest.cells[0];
    let epochs = out.manifest.config.epochs;
    let mut worst = f64::INFINITY;
    let mut counts = [0usize; 2];
    let mut complete = true;
    for run in &out.runs {
        for (slot, check) in [AuditCheck::FDescent, AuditCheck::Deviation].into_iter().enumerate() {
            let entries: Vec<_> = run.result.audit.applicable(check).collect();
            complete &= entries.len() == epochs;
            counts[slot] += entries.len();
            for e in entries {
                worst = worst.min(e.slack / e.rhs.abs().max(1.0));
            }
        }
        complete &= run.result.divergence.is_none();
    }
    let ok = cell.validity.passes() && complete && worst >= -tol;
    outcome(
        ok,
        format!(
            "validity {}, {} runs, F-descent {} / deviation {} checks, min rel slack {worst:.2e}",
            if cell.validity.passes() { "ok" } else { "FAILED" },
            out.runs.len(),
            counts[0],
            counts[1]
        ),
    )
}

fn c6_audit(ctx: &Ctx) -> Variants {
    let tol = ctx.tol(6, 1e-9);
    let schedules = ScheduleGrid::Preset { preset: Preset::CubeRootDecay, args: PresetArgs::default() };
    let run = |spec: ProblemSpec| -> Outcome {
        match execute(&audit_config("c6", spec, schedules.clone(), 50), Mode::Grid, None) {
            Ok(out) => audit_summary(&out, tol),
            Err(e) => (false, e.to_string()),
        }
    };
    let mut parts = vec![("q".to_owned(), Some(run(quadratic(100, 10, (0.5, 1.5), 6))))];
    match ctx.w8a(1_000) {
        Some(spec) => parts.push(("w".to_owned(), Some(run(spec)))),
        None => {
            parts.push(("s".to_owned(), Some(run(synthetic_logistic(1_250, 300, 6)))));
            parts.push(skipped_dataset());
        }
    }
    parts
}

fn certified(p: &LoadedProblem) -> ProblemConstants {
    let obj = p.objective();
    let (theta_hat, sigma_sq_hat) = p.variance_constants();
    let sigma_star_sq =
        obj.minimizer().map(|w| shufflesgd::problems::sigma_star(obj, w).expect("stationary minimizer"));
    ProblemConstants {
        theta_hat,
        sigma_sq_hat,
        sigma_star_sq,
        mu: obj.strong_convexity(),
        ..ProblemConstants::with_smoothness(obj.smoothness())
    }
}

fn c7_expectation(ctx: &Ctx) -> Variants {
    let tol = ctx.tol(7, 1e-9);
    let mut parts = Vec::new();
    let exhaustive = || -> Result<Outcome, String> {
        let p = load(&quadratic(6, 3, (0.5, 1.5), 7))?;
        let consts = certified(&p);
        let eta = 0.5 / consts.l_hat;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (mut worst, mut applicable) = (f64::INFINITY, 0);
        for _ in 0..20 {
            let w: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let r = audit_rr_expectation(p.objective(), &consts, &w, eta, PermutationSampling::Exhaustive)
                .map_err(|e| e.to_string())?;
            for c in [&r.deviation, &r.distance] {
                if c.applicable {
                    applicable += 1;
                    worst = worst.min((c.rhs - c.mean_lhs) / c.rhs.abs().max(1.0));
                }
            }
        }
        Ok(outcome(
            applicable == 40 && worst >= -tol,
            format!("n=6 over 720 orders at 20 points: {applicable}/40 checks, min rel slack {worst:.2e}"),
        ))
    };
    parts.push(("q".to_owned(), Some(exhaustive().unwrap_or_else(|e| (false, e)))));
    let sampled = |spec: ProblemSpec| -> Result<Outcome, String> {
        let full = load(&spec)?;
        let LoadedProblem::Logistic { problem, .. } = &full else { return Err("expected logistic".into()) };
        let _ = problem;
        let consts = certified(&full);
        let eta = 0.5 / consts.l_hat;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let d = full.objective().dim();
        let (mut held, mut applicable, mut worst_z) = (0, 0, f64::NEG_INFINITY);
        for k in 0..5u64 {
            let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r = audit_rr_expectation(
                full.objective(),
                &consts,
                &w,
                eta,
                PermutationSampling::Sampled { count: 1_000, seed: k },
            )
            .map_err(|e| e.to_string())?;
            if r.deviation.applicable {
                applicable += 1;
                held += usize::from(r.deviation.holds);
                let z = (r.deviation.mean_lhs - r.deviation.rhs) / r.deviation.std_err.max(f64::MIN_POSITIVE);
                worst_z = worst_z.max(z);
            }
        }
        Ok(outcome(
            applicable == 5 && held == 5,
            format!("n=20 logistic, 1000 sampled orders at 5 points: {held}/{applicable} hold, max (mean-rhs)/SE {worst_z:.1}"),
        ))
    };
    let spec20 = ctx.w8a(20);
    let dataset_missing = spec20.is_none();
    let spec = spec20.unwrap_or_else(|| synthetic_logistic(25, 300, 70));
    parts.push(("l".to_owned(), Some(sampled(spec).unwrap_or_else(|e| (false, e)))));
    if dataset_missing {
        parts.push(skipped_dataset());
    }
    parts
}

fn mean_gap_curve(out: &ExperimentOutput, strategy: &ShuffleKind) -> Vec<(f64, f64)> {
    let runs: Vec<_> = out.runs.iter().filter(|r| &r.strategy == strategy).collect();
    let epochs = runs.iter().map(|r| r.result.traces.len()).min().unwrap_or(0);
    (0..epochs)
        .map(|k| {
            let m = runs.iter().map(|r| r.result.traces[k].metrics.gap.unwrap_or(f64::NAN)).sum::<f64>()
                / runs.len() as f64;
            ((k + 1) as f64, m)
        })
        .collect()
}

const RATE_QUADRATIC: (f64, f64) = (1.0, 2.0);

fn c8_rate(ctx: &Ctx) -> Variants {
    let threshold = ctx.tol(8, -1.6);
    let mut cfg = audit_config(
        "c8",
        quadratic(100, 10, RATE_QUADRATIC, 8),
        ScheduleGrid::Preset { preset: Preset::StronglyConvexDiminishing, args: PresetArgs::default() },
        2_000,
    );
    cfg.strategies = vec![ShuffleKind::RandomReshuffle];
    cfg.audit = false;
    cfg.init = InitSpec::Uniform { radius: 3.0, seed: 8 };
    let o = match execute(&cfg, Mode::Grid, None) {
        Ok(out) => {
            let curve = mean_gap_curve(&out, &ShuffleKind::RandomReshuffle);
            let kappa = out.manifest.constants_certified.kappa.unwrap_or(f64::NAN);
            match fit_loglog_slope(&curve, None) {
                Ok(f) => outcome(
                    f.slope <= threshold && kappa <= 2.0,
                    format!(
                        "kappa {kappa:.3}, slope on [T/2, T] {:.3} (need <= {threshold}), R^2 {:.4}",
                        f.slope, f.r_squared
                    ),
                ),
                Err(e) => (false, e.to_string()),
            }
        }
        Err(e) => (false, e.to_string()),
    };
    single(o)
}

fn c9_rr_vs_ig(ctx: &Ctx) -> Variants {
    let ratio_tol = ctx.tol(9, 1.0);
    let mut cfg = audit_config(
        "c9",
        quadratic(100, 10, RATE_QUADRATIC, 8),
        ScheduleGrid::Preset { preset: Preset::ReshuffledConvexDiminishing, args: PresetArgs::default() },
        2_000,
    );
    cfg.strategies = vec![ShuffleKind::RandomReshuffle, ShuffleKind::IncrementalGradient];
    cfg.audit = false;
    cfg.init = InitSpec::Uniform { radius: 3.0, seed: 8 };
    let o = match execute(&cfg, Mode::Compare, None) {
        Ok(out) => {
            let rr = mean_gap_curve(&out, &ShuffleKind::RandomReshuffle);
            let ig = mean_gap_curve(&out, &ShuffleKind::IncrementalGradient);
            let ig_runs = out.runs.iter().filter(|r| r.strategy == ShuffleKind::IncrementalGradient).count();
            match (rr.last(), ig.last()) {
                (Some(&(_, a)), Some(&(_, b))) => outcome(
                    ig_runs == 1 && a <= ratio_tol * b,
                    format!("final mean gap RR {a:.3e} vs IG {b:.3e} (ratio {:.3})", a / b),
                ),
                _ => (false, "no epochs recorded".into()),
            }
        }
        Err(e) => (false, e.to_string()),
    };
    single(o)
}

fn ordering(spec: ProblemSpec) -> Outcome {
    let cfg = ExperimentConfig {
        name: "c10".into(),
        problem: spec,
        strategies: vec![ShuffleKind::RandomReshuffle],
        schedules: ScheduleGrid::Grid { alphas: vec![1.0 / 3.0, 0.5, 1.0], gamma_over_n: vec![0.01], beta: 1.0 },
        epochs: 20,
        seeds: (0..10).collect(),
        init: InitSpec::Zero,
        audit: false,
        output_dir: None,
        workers: None,
    };
    let out = match execute(&cfg, Mode::Grid, None) {
        Ok(o) => o,
        Err(e) => return (false, e.to_string()),
    };
    let finals: Vec<(f64, f64)> =
        out.aggregates.iter().filter(|a| a.epoch == 20).map(|a| (a.alpha, a.train_loss_mean)).collect();
    let best = finals.iter().copied().fold((f64::NAN, f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b });
    let detail = finals.iter().map(|(a, l)| format!("a={a:.3}: {l:.5}")).collect::<Vec<_>>().join(", ");
    outcome(finals.len() == 3 && best.0 == 1.0 / 3.0, format!("final mean train loss {detail}"))
}

fn c10_ordering(ctx: &Ctx) -> Variants {
    match ctx.w8a(5_000) {
        Some(spec) => vec![("w".to_owned(), Some(ordering(spec)))],
        None => vec![("s".to_owned(), Some(ordering(synthetic_logistic(6_250, 300, 10)))), skipped_dataset()],
    }
}

fn c11_slope(ctx: &Ctx) -> Variants {
    let tol = ctx.tol(11, 1e-6);
    let mut worst: f64 = 0.0;
    for p in [-2.0, -1.0, -2.0 / 3.0, -0.5] {
        let series: Vec<(f64, f64)> = (1..=1_000).map(|t| (t as f64, 3.7 * (t as f64).powf(p))).collect();
        worst = match fit_loglog_slope(&series, None) {
            Ok(f) => worst.max((f.slope - p).abs()),
            Err(_) => f64::INFINITY,
        };
    }
    single(outcome(worst <= tol, format!("max |slope error| {worst:.2e} (tol {tol:.0e})")))
}

/// Per-run CSV with the `wall_ms` column removed.
pub fn strip_wall_ms(csv_text: &str) -> String {
    let mut lines = csv_text.lines();
    let Some(header) = lines.next() else { return String::new() };
    let col = header.split(',').position(|h| h == "wall_ms");
    let drop = |line: &str| -> String {
        match col {
            Some(c) => {
                line.split(',').enumerate().filter(|&(i, _)| i != c).map(|(_, f)| f).collect::<Vec<_>>().join(",")
            }
            None => line.to_owned(),
        }
    };
    std::iter::once(header).chain(lines).map(|l| drop(l) + "\n").collect()
}

fn reproducibility_config() -> ExperimentConfig {
    ExperimentConfig {
        name: "repro".into(),
        problem: synthetic_logistic(400, 60, 12),
        strategies: vec![ShuffleKind::RandomReshuffle, ShuffleKind::ShuffleOnce, ShuffleKind::IncrementalGradient],
        schedules: ScheduleGrid::Grid { alphas: vec![1.0 / 3.0, 0.5], gamma_over_n: vec![0.01, 0.005], beta: 1.0 },
        epochs: 15,
        seeds: vec![1, 2, 3],
        init: InitSpec::Zero,
        audit: false,
        output_dir: None,
        workers: None,
    }
}

fn c12_reproducibility(_: &Ctx) -> Variants {
    let cfg = reproducibility_config();
    let base = std::env::temp_dir().join(format!("shufflesgd-accept-{}", std::process::id()));
    let run = || -> Result<Outcome, String> {
        let problem = load(&cfg.problem)?;
        let mut texts = Vec::new();
        for (k, workers) in [1usize, 4].into_iter().enumerate() {
            let out = execute_on(&cfg, &problem, Mode::Grid, Some(workers)).map_err(|e| e.to_string())?;
            let files = write_outputs(&out, &base.join(k.to_string())).map_err(|e| e.to_string())?;
            let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| e.to_string());
            texts.push((strip_wall_ms(&read(&files.runs)?), read(&files.aggregate)?, read(&files.manifest)?));
        }
        let same = texts[0] == texts[1];
        let rows = texts[0].0.lines().count() - 1;
        Ok(outcome(same, format!("{rows} rows, runs/aggregate/manifest identical across worker counts: {same}")))
    };
    let o = run().unwrap_or_else(|e| (false, e));
    let _ = std::fs::remove_dir_all(&base);
    single(o)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_only_the_timing_column() {
        let t = "a,wall_ms,b\n1,0.5,2\n3,,4\n";
        assert_eq!(strip_wall_ms(t), "a,b\n1,2\n3,4\n");
    }
}
