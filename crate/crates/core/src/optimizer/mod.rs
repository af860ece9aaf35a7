//! The shuffling epoch loop, run driver and trajectory records.

mod audit;
mod sgd;

pub use audit::{
    audit_epoch, audit_rr_expectation, AuditCheck, AuditEntry, AuditReport, EpochAuditInput, ExpectationCheck,
    PermutationSampling, RrExpectationReport, DEFAULT_AUDIT_TOLERANCE,
};
pub use sgd::{run_sgd_baseline, SgdRecord, SgdTrace};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{FiniteSumProblem, ProblemConstants};
use crate::scalar::{dist_sq, norm_sq, Scalar};
use crate::schedules::Schedule;
use crate::shuffling::{Permutation, ShuffleKind, ShuffleStrategy};

/// Starting point rule.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialPoint<S> {
    #[default]
    Zero,
    Given(Vec<S>),
}

/// Settings of a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig<S: Scalar> {
    epochs: usize,
    pub schedule: Schedule<S>,
    pub strategy: ShuffleKind,
    pub init: InitialPoint<S>,
    /// Constants for the per-epoch audits; `None` disables auditing.
    pub audit: Option<ProblemConstants<S>>,
    /// Keep every outer iterate in the trace.
    pub record_weights: bool,
}

impl<S: Scalar> OptimizerConfig<S> {
    pub fn new(epochs: usize, schedule: Schedule<S>, strategy: ShuffleKind) -> Result<Self> {
        if epochs == 0 {
            return Err(Error::Config("epoch budget T must be at least 1".into()));
        }
        Ok(Self { epochs, schedule, strategy, init: InitialPoint::Zero, audit: None, record_weights: false })
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    pub fn with_init(mut self, init: InitialPoint<S>) -> Self {
        self.init = init;
        self
    }

    pub fn with_audit(mut self, consts: ProblemConstants<S>) -> Self {
        self.audit = Some(consts);
        self
    }

    pub fn with_recorded_weights(mut self, record: bool) -> Self {
        self.record_weights = record;
        self
    }
}

/// Objective metrics at an outer iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMetrics<S> {
    pub f_val: S,
    pub grad_norm_sq: S,
    /// `|w - w*|^2` when the minimizer is known.
    pub dist_sq: Option<S>,
    /// `F(w) - F*` when the optimum is known.
    pub gap: Option<S>,
}

impl<S: Scalar> PointMetrics<S> {
    pub fn at<P: FiniteSumProblem<S> + ?Sized>(problem: &P, w: &[S]) -> Self {
        Self {
            f_val: problem.full_value(w),
            grad_norm_sq: norm_sq(&problem.full_grad(w)),
            dist_sq: problem.minimizer().map(|ws| dist_sq(w, ws)),
            gap: problem.optimality_gap(w),
        }
    }

    fn is_finite(&self) -> bool {
        self.f_val.is_finite() && self.grad_norm_sq.is_finite()
    }
}

/// Record of epoch `t`, measured at the outer iterate after the epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochTrace<S> {
    pub t: usize,
    pub eta_t: S,
    /// Present when weights are recorded.
    pub w_tilde: Option<Vec<S>>,
    pub metrics: PointMetrics<S>,
    /// `sum_{i<n} |w_i - w_0|^2` over the epoch's inner iterates.
    pub inner_dev_sum: S,
    pub permutation_digest: u64,
}

/// Position at which a run produced a non-finite value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divergence {
    pub epoch: usize,
    pub inner: usize,
}

/// Outcome of [`run`]. A diverged run keeps the epochs completed before the failure.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult<S> {
    pub seed: u64,
    pub initial_w: Vec<S>,
    pub initial: PointMetrics<S>,
    pub traces: Vec<EpochTrace<S>>,
    pub final_w: Vec<S>,
    /// `sum_t eta_t w_{t-1} / sum_t eta_t` over completed epochs.
    pub w_hat: Option<Vec<S>>,
    /// Wall-clock milliseconds per completed epoch (not part of the determinism contract).
    pub wall_ms: Vec<f64>,
    pub audit: AuditReport<S>,
    pub divergence: Option<Divergence>,
}

/// Result of one pass over the components.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochOutput<S> {
    pub w_next: Vec<S>,
    pub inner_dev_sum: S,
}

/// One epoch: `w_i = w_{i-1} - (eta_t / n) grad f(w_{i-1}; perm[i])`.
///
/// A non-finite iterate yields [`Error::Divergence`] with `epoch = 0` and the
/// 1-based inner index; [`run`] fills in the epoch.
pub fn run_epoch<S: Scalar, P: FiniteSumProblem<S> + ?Sized>(
    problem: &P,
    w: &[S],
    eta_t: S,
    perm: &Permutation,
) -> Result<EpochOutput<S>> {
    let n = problem.n();
    if perm.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: perm.len() });
    }
    if w.len() != problem.dim() {
        return Err(Error::DimensionMismatch { expected: problem.dim(), got: w.len() });
    }
    if !(eta_t > S::zero()) {
        return Err(Error::Argument(format!("step size must be positive, got {eta_t}")));
    }
    let step = eta_t / S::from_usize_lossy(n);
    let mut cur = w.to_vec();
    let mut grad = vec![S::zero(); w.len()];
    let mut dev = S::zero();
    for (k, &i) in perm.as_slice().iter().enumerate() {
        dev = dev + dist_sq(&cur, w);
        problem.grad_at(&cur, i, &mut grad);
        let mut finite = true;
        for (x, &g) in cur.iter_mut().zip(&grad) {
            *x = *x - step * g;
            finite &= x.is_finite();
        }
        if !finite || !dev.is_finite() {
            return Err(Error::Divergence { epoch: 0, inner: k + 1 });
        }
    }
    Ok(EpochOutput { w_next: cur, inner_dev_sum: dev })
}

fn initial_point<S: Scalar>(init: &InitialPoint<S>, d: usize) -> Result<Vec<S>> {
    match init {
        InitialPoint::Zero => Ok(vec![S::zero(); d]),
        InitialPoint::Given(w) if w.len() == d => Ok(w.clone()),
        InitialPoint::Given(w) => Err(Error::DimensionMismatch { expected: d, got: w.len() }),
    }
}

/// Runs the configured number of epochs. Deterministic in `(problem, config, seed)`.
pub fn run<S: Scalar, P: FiniteSumProblem<S> + ?Sized>(
    problem: &P,
    config: &OptimizerConfig<S>,
    seed: u64,
) -> Result<RunResult<S>> {
    let n = problem.n();
    if n == 0 {
        return Err(Error::Empty);
    }
    let mut strategy = ShuffleStrategy::new(config.strategy.clone(), seed)?;
    let w0 = initial_point(&config.init, problem.dim())?;
    let initial = PointMetrics::at(problem, &w0);
    let mut result = RunResult {
        seed,
        initial_w: w0.clone(),
        initial,
        traces: Vec::with_capacity(config.epochs),
        final_w: w0.clone(),
        w_hat: None,
        wall_ms: Vec::with_capacity(config.epochs),
        audit: AuditReport::default(),
        divergence: None,
    };
    let mut w = w0;
    let mut prev = initial;
    let mut weighted = vec![S::zero(); w.len()];
    let mut eta_sum = S::zero();
    for t in 1..=config.epochs {
        let eta = config.schedule.eta_at(t);
        let perm = strategy.next_permutation(t, n)?;
        let start = Instant::now();
        let out = match run_epoch(problem, &w, eta, &perm) {
            Ok(out) => out,
            Err(Error::Divergence { inner, .. }) => {
                result.divergence = Some(Divergence { epoch: t, inner });
                break;
            }
            Err(e) => return Err(e),
        };
        let metrics = PointMetrics::at(problem, &out.w_next);
        if !metrics.is_finite() {
            result.divergence = Some(Divergence { epoch: t, inner: n });
            break;
        }
        result.wall_ms.push(start.elapsed().as_secs_f64() * 1e3);
        if let Some(consts) = &config.audit {
            let input = EpochAuditInput {
                epoch: t,
                eta,
                w_prev: &w,
                prev: &prev,
                next: &metrics,
                inner_dev_sum: out.inner_dev_sum,
            };
            result.audit.entries.extend(audit_epoch(problem, consts, &input));
        }
        for (a, &x) in weighted.iter_mut().zip(&w) {
            *a = *a + eta * x;
        }
        eta_sum = eta_sum + eta;
        result.traces.push(EpochTrace {
            t,
            eta_t: eta,
            w_tilde: config.record_weights.then(|| out.w_next.clone()),
            metrics,
            inner_dev_sum: out.inner_dev_sum,
            permutation_digest: perm.digest(),
        });
        w = out.w_next;
        prev = metrics;
    }
    if eta_sum > S::zero() {
        result.w_hat = Some(weighted.into_iter().map(|a| a / eta_sum).collect());
    }
    result.final_w = w;
    Ok(result)
}

/// `sum_t eta_t w_{t-1} / sum_t eta_t` from recorded traces; `initial_w` is `w_0`.
pub fn weighted_average_iterate<S: Scalar>(initial_w: &[S], traces: &[EpochTrace<S>]) -> Result<Vec<S>> {
    if traces.is_empty() {
        return Err(Error::Argument("need at least one epoch".into()));
    }
    let mut points: Vec<&[S]> = vec![initial_w];
    for tr in &traces[..traces.len() - 1] {
        points.push(tr.w_tilde.as_deref().ok_or(Error::WeightsNotRecorded)?);
    }
    let weights: Vec<S> = traces.iter().map(|tr| tr.eta_t).collect();
    weighted_average(&points, &weights)
}

/// `sum_k weights[k] points[k] / sum_k weights[k]`.
pub fn weighted_average<S: Scalar>(points: &[&[S]], weights: &[S]) -> Result<Vec<S>> {
    if points.len() != weights.len() || points.is_empty() {
        return Err(Error::Argument("points and weights must be non-empty and of equal length".into()));
    }
    let d = points[0].len();
    let total: S = weights.iter().copied().sum();
    if !(total > S::zero()) {
        return Err(Error::Argument("weights must have a positive sum".into()));
    }
    let mut out = vec![S::zero(); d];
    for (p, &wt) in points.iter().zip(weights) {
        if p.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.len() });
        }
        for (o, &x) in out.iter_mut().zip(p.iter()) {
            *o = *o + wt * x;
        }
    }
    Ok(out.into_iter().map(|o| o / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::QuadraticSC;

    fn one_d() -> QuadraticSC<f64> {
        QuadraticSC::new(vec![vec![0.0], vec![2.0]], vec![vec![1.0], vec![1.0]]).unwrap()
    }

    #[test]
    fn two_step_hand_example() {
        let q = one_d();
        let out = run_epoch(&q, &[0.0], 1.0, &Permutation::new(vec![0, 1]).unwrap()).unwrap();
        assert_eq!((out.w_next, out.inner_dev_sum), (vec![1.0], 0.0));
        let out = run_epoch(&q, &[0.0], 1.0, &Permutation::new(vec![1, 0]).unwrap()).unwrap();
        assert_eq!((out.w_next, out.inner_dev_sum), (vec![0.5], 1.0));
    }

    #[test]
    fn single_component_is_gradient_step() {
        let q = QuadraticSC::new(vec![vec![1.0, 2.0]], vec![vec![2.0, 0.5]]).unwrap();
        let out = run_epoch(&q, &[0.0, 0.0], 0.1, &Permutation::identity(1)).unwrap();
        assert_eq!(out.w_next, vec![0.1 * 2.0, 0.1 * 0.5 * 2.0]);
        assert_eq!(out.inner_dev_sum, 0.0);
    }

    #[test]
    fn divergence_keeps_partial_trace() {
        let q = one_d();
        let cfg = OptimizerConfig::new(2000, Schedule::constant(30.0).unwrap(), ShuffleKind::IncrementalGradient)
            .unwrap()
            .with_init(InitialPoint::Given(vec![1.0e3]));
        let r = run(&q, &cfg, 0).unwrap();
        let div = r.divergence.expect("must diverge");
        assert_eq!(r.traces.len(), div.epoch - 1);
        assert!(r.traces.iter().all(|t| t.metrics.f_val.is_finite()));
    }

    #[test]
    fn zero_epochs_rejected() {
        assert!(OptimizerConfig::new(0, Schedule::constant(0.1).unwrap(), ShuffleKind::RandomReshuffle).is_err());
    }

    #[test]
    fn weighted_average_examples() {
        let tr = |t, eta: f64, w: f64| EpochTrace {
            t,
            eta_t: eta,
            w_tilde: Some(vec![w]),
            metrics: PointMetrics { f_val: 0.0, grad_norm_sq: 0.0, dist_sq: None, gap: None },
            inner_dev_sum: 0.0,
            permutation_digest: 0,
        };
        let traces = vec![tr(1, 1.0, 4.0), tr(2, 3.0, 9.0)];
        assert_eq!(weighted_average_iterate(&[0.0], &traces).unwrap(), vec![3.0]);
        assert_eq!(weighted_average_iterate(&[0.7], &traces[..1]).unwrap(), vec![0.7]);
        let mut unrecorded = traces.clone();
        unrecorded[0].w_tilde = None;
        assert_eq!(weighted_average_iterate(&[0.0], &unrecorded), Err(Error::WeightsNotRecorded));
    }
}
