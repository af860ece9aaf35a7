//! Per-epoch checks of the inequalities that drive the convergence analysis.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::problems::{component_variance, FiniteSumProblem, ProblemConstants};
use crate::scalar::{dist_sq, Scalar};
use crate::shuffling::{Permutation, ShuffleKind, ShuffleStrategy};

use super::{run_epoch, PointMetrics};

/// Relative slack accepted by the audits.
pub const DEFAULT_AUDIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditCheck {
    /// `F(w_t) <= F(w_{t-1}) - (eta/2)|grad F(w_{t-1})|^2 + (L^2 eta / 2n) dev`, needs `eta <= 1/L`.
    FDescent,
    /// `dev <= n eta^2 [(3 Theta + 2)|grad F|^2 + 3 sigma^2]`, needs `eta <= 1/(L sqrt3)`.
    Deviation,
    /// `dev/n <= (8L^2/3) eta^2 |w - w*|^2 + (16 L^2 sigma*^2 / 3) eta^4 + 2 sigma*^2 eta^2`, needs `eta <= 1/(2L)`.
    DeviationNearOptimum,
    /// `E dev <= 2 eta^2 [(Theta + n)|grad F|^2 + sigma^2]` under uniform reshuffling.
    ReshuffledDeviation,
    /// `E|w_t - w*|^2 <= |w - w*|^2 - 2 eta (F(w) - F*) + 2 L eta^3 sigma*^2 / (3n)`,
    /// convex components and `eta <= (sqrt5 - 1)/(2L)`.
    ReshuffledDistance,
}

/// Outcome of one check at one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry<S> {
    pub epoch: usize,
    pub check: AuditCheck,
    pub lhs: S,
    pub rhs: S,
    /// `rhs - lhs`.
    pub slack: S,
    pub applicable: bool,
    pub reason: Option<String>,
}

impl<S: Scalar> AuditEntry<S> {
    fn evaluated(epoch: usize, check: AuditCheck, lhs: S, rhs: S) -> Self {
        Self { epoch, check, lhs, rhs, slack: rhs - lhs, applicable: true, reason: None }
    }

    fn skipped(epoch: usize, check: AuditCheck, reason: &str) -> Self {
        Self {
            epoch,
            check,
            lhs: S::nan(),
            rhs: S::nan(),
            slack: S::nan(),
            applicable: false,
            reason: Some(reason.to_owned()),
        }
    }

    /// Skipped entries hold vacuously.
    pub fn holds(&self, rel_tol: S) -> bool {
        !self.applicable || self.slack >= -rel_tol * S::one().max(self.rhs.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AuditReport<S> {
    pub entries: Vec<AuditEntry<S>>,
}

impl<S: Scalar> AuditReport<S> {
    pub fn applicable(&self, check: AuditCheck) -> impl Iterator<Item = &AuditEntry<S>> {
        self.entries.iter().filter(move |e| e.check == check && e.applicable)
    }

    pub fn violations(&self, rel_tol: S) -> Vec<&AuditEntry<S>> {
        self.entries.iter().filter(|e| !e.holds(rel_tol)).collect()
    }

    pub fn all_hold(&self, rel_tol: S) -> bool {
        self.violations(rel_tol).is_empty()
    }
}

/// Data of epoch `epoch` needed by [`audit_epoch`].
#[derive(Debug, Clone, Copy)]
pub struct EpochAuditInput<'a, S> {
    pub epoch: usize,
    pub eta: S,
    pub w_prev: &'a [S],
    pub prev: &'a PointMetrics<S>,
    pub next: &'a PointMetrics<S>,
    pub inner_dev_sum: S,
}

const STEP_SKIP: &str = "step-size precondition violated";
const VARIANCE_SKIP: &str = "variance bound does not hold at epoch start";

/// Deterministic checks on a realized epoch.
pub fn audit_epoch<S: Scalar, P: FiniteSumProblem<S> + ?Sized>(
    problem: &P,
    consts: &ProblemConstants<S>,
    input: &EpochAuditInput<'_, S>,
) -> Vec<AuditEntry<S>> {
    let lit = S::lit;
    let EpochAuditInput { epoch, eta, w_prev, prev, next, inner_dev_sum: dev } = *input;
    let n = S::from_usize_lossy(problem.n());
    let l = consts.l_hat;
    let g = prev.grad_norm_sq;
    let mut out = Vec::with_capacity(3);

    out.push(if eta <= S::one() / l {
        let rhs = prev.f_val - eta / lit(2.0) * g + l * l * eta / (lit(2.0) * n) * dev;
        AuditEntry::evaluated(epoch, AuditCheck::FDescent, next.f_val, rhs)
    } else {
        AuditEntry::skipped(epoch, AuditCheck::FDescent, STEP_SKIP)
    });

    out.push(if !(eta <= S::one() / (l * lit(3.0).sqrt())) {
        AuditEntry::skipped(epoch, AuditCheck::Deviation, STEP_SKIP)
    } else if !consts.variance_bound_holds(component_variance(problem, w_prev), g, lit(DEFAULT_AUDIT_TOLERANCE)) {
        AuditEntry::skipped(epoch, AuditCheck::Deviation, VARIANCE_SKIP)
    } else {
        let rhs = n * eta * eta * ((lit(3.0) * consts.theta_hat + lit(2.0)) * g + lit(3.0) * consts.sigma_sq_hat);
        AuditEntry::evaluated(epoch, AuditCheck::Deviation, dev, rhs)
    });

    out.push(match (problem.minimizer(), consts.sigma_star_sq) {
        (Some(ws), Some(s2)) if eta <= S::one() / (lit(2.0) * l) => {
            let e2 = eta * eta;
            let rhs = lit(8.0) * l * l / lit(3.0) * e2 * dist_sq(w_prev, ws)
                + lit(16.0) * l * l * s2 / lit(3.0) * e2 * e2
                + lit(2.0) * s2 * e2;
            AuditEntry::evaluated(epoch, AuditCheck::DeviationNearOptimum, dev / n, rhs)
        }
        (Some(_), Some(_)) => AuditEntry::skipped(epoch, AuditCheck::DeviationNearOptimum, STEP_SKIP),
        _ => AuditEntry::skipped(epoch, AuditCheck::DeviationNearOptimum, "minimizer or sigma_star unknown"),
    });
    out
}

/// Which permutations [`audit_rr_expectation`] averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PermutationSampling {
    /// All `n!` orders.
    Exhaustive,
    /// `count` orders drawn uniformly with the given seed.
    Sampled { count: usize, seed: u64 },
}

/// Expected value of a per-epoch quantity over random permutations versus its bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationCheck<S> {
    pub check: AuditCheck,
    pub mean_lhs: S,
    /// Standard error of `mean_lhs` (zero when exhaustive).
    pub std_err: S,
    pub rhs: S,
    pub samples: usize,
    pub applicable: bool,
    pub reason: Option<String>,
    /// Exhaustive: `mean <= rhs` up to relative tolerance. Sampled: `mean <= rhs + 3 SE`.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RrExpectationReport<S> {
    pub deviation: ExpectationCheck<S>,
    pub distance: ExpectationCheck<S>,
}

fn mean_and_se<S: Scalar>(xs: &[S]) -> (S, S) {
    let m = S::from_usize_lossy(xs.len());
    let mean = xs.iter().copied().sum::<S>() / m;
    if xs.len() < 2 {
        return (mean, S::zero());
    }
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<S>() / (m - S::one());
    (mean, (var / m).sqrt())
}

fn expectation<S: Scalar>(
    check: AuditCheck,
    samples: &[S],
    rhs: S,
    exhaustive: bool,
    gate: Option<&str>,
) -> ExpectationCheck<S> {
    if let Some(reason) = gate {
        return ExpectationCheck {
            check,
            mean_lhs: S::nan(),
            std_err: S::nan(),
            rhs: S::nan(),
            samples: 0,
            applicable: false,
            reason: Some(reason.to_owned()),
            holds: true,
        };
    }
    let (mean, se) = mean_and_se(samples);
    let tol = S::lit(DEFAULT_AUDIT_TOLERANCE) * S::one().max(rhs.abs());
    let allowance = if exhaustive { tol } else { S::lit(3.0) * se + tol };
    ExpectationCheck {
        check,
        mean_lhs: mean,
        std_err: if exhaustive { S::zero() } else { se },
        rhs,
        samples: samples.len(),
        applicable: true,
        reason: None,
        holds: mean <= rhs + allowance,
    }
}

/// Averages one epoch started at `w` over uniformly random orders and compares
/// the mean inner deviation and the mean squared distance to `w*` with their bounds.
pub fn audit_rr_expectation<S: Scalar, P: FiniteSumProblem<S> + ?Sized>(
    problem: &P,
    consts: &ProblemConstants<S>,
    w: &[S],
    eta: S,
    sampling: PermutationSampling,
) -> crate::error::Result<RrExpectationReport<S>> {
    let lit = S::lit;
    let n = problem.n();
    let nn = S::from_usize_lossy(n);
    let l = consts.l_hat;
    let perms: Vec<Permutation> = match sampling {
        PermutationSampling::Exhaustive => {
            if n > 9 {
                return Err(crate::error::Error::Argument(format!("exhaustive audit over {n}! orders is too large")));
            }
            (0..n).permutations(n).map(|p| Permutation::new(p).expect("itertools yields bijections")).collect()
        }
        PermutationSampling::Sampled { count, seed } => {
            let mut s = ShuffleStrategy::new(ShuffleKind::RandomReshuffle, seed)?;
            (1..=count).map(|t| s.next_permutation(t, n)).collect::<crate::error::Result<_>>()?
        }
    };
    let exhaustive = sampling == PermutationSampling::Exhaustive;
    let mut devs = Vec::with_capacity(perms.len());
    let mut dists = Vec::with_capacity(perms.len());
    let w_star = problem.minimizer();
    for p in &perms {
        let out = run_epoch(problem, w, eta, p)?;
        devs.push(out.inner_dev_sum);
        if let Some(ws) = w_star {
            dists.push(dist_sq(&out.w_next, ws));
        }
    }
    let g = crate::scalar::norm_sq(&problem.full_grad(w));

    let dev_gate = if !(eta <= S::one() / (l * lit(3.0).sqrt())) {
        Some(STEP_SKIP)
    } else if !consts.variance_bound_holds(component_variance(problem, w), g, lit(DEFAULT_AUDIT_TOLERANCE)) {
        Some(VARIANCE_SKIP)
    } else {
        None
    };
    let dev_rhs = lit(2.0) * eta * eta * ((consts.theta_hat + nn) * g + consts.sigma_sq_hat);
    let deviation = expectation(AuditCheck::ReshuffledDeviation, &devs, dev_rhs, exhaustive, dev_gate);

    let golden = (lit(5.0).sqrt() - S::one()) / (lit(2.0) * l);
    let (dist_gate, dist_rhs) = match (w_star, consts.sigma_star_sq, problem.optimality_gap(w)) {
        _ if !problem.components_convex() => (Some("components are not all convex"), S::nan()),
        _ if !(eta <= golden) => (Some(STEP_SKIP), S::nan()),
        (Some(ws), Some(s2), Some(gap)) => {
            (None, dist_sq(w, ws) - lit(2.0) * eta * gap + lit(2.0) * l * eta * eta * eta * s2 / (lit(3.0) * nn))
        }
        _ => (Some("minimizer or sigma_star unknown"), S::nan()),
    };
    let distance = expectation(AuditCheck::ReshuffledDistance, &dists, dist_rhs, exhaustive, dist_gate);
    Ok(RrExpectationReport { deviation, distance })
}
