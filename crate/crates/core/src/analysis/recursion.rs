use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Step rule of the recursion `Y_{t+1} <= (1 - rho eta_t) Y_t + D eta_t^{q+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule<S> {
    Constant {
        eta: S,
    },
    /// `eta_t = q / (rho (t + beta))`.
    Diminishing {
        beta: S,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecursionParams<S> {
    pub rho: S,
    pub d: S,
    pub q: u32,
    pub step: StepRule<S>,
}

impl<S: Scalar> RecursionParams<S> {
    /// Checks the hypotheses under which the closed bounds hold.
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > S::zero() && self.rho.is_finite()) {
            return Err(Error::Hypothesis("rho must be positive".into()));
        }
        if !(self.d >= S::zero() && self.d.is_finite()) {
            return Err(Error::Hypothesis("D must be nonnegative".into()));
        }
        if self.q == 0 {
            return Err(Error::Hypothesis("q must be a positive integer".into()));
        }
        match self.step {
            StepRule::Constant { eta } if !(eta > S::zero() && self.rho * eta < S::one()) => {
                Err(Error::Hypothesis("constant step must satisfy 0 < eta < 1/rho".into()))
            }
            StepRule::Diminishing { beta } if !(beta >= S::from_u32(self.q - 1).unwrap().max(S::one())) => {
                Err(Error::Hypothesis("diminishing step needs beta >= max(q - 1, 1)".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn eta_at(&self, t: usize) -> S {
        match self.step {
            StepRule::Constant { eta } => eta,
            StepRule::Diminishing { beta } => {
                S::from_u32(self.q).unwrap() / (self.rho * (S::from_usize_lossy(t) + beta))
            }
        }
    }

    /// Right-hand side of the recursion at step `t`.
    pub fn step(&self, y: S, t: usize) -> S {
        let eta = self.eta_at(t);
        (S::one() - self.rho * eta) * y + self.d * eta.powi(self.q as i32 + 1)
    }
}

/// Closed-form bound on `Y_{t+1}`.
///
/// Diminishing: `prod_j (beta - j)/(t + beta - j) Y_1 + q^{q+1} D log(t + beta) / (rho^{q+1} prod_j (t + beta - j))`
/// over `j = 0..q`. Constant: `Y_1 exp(-rho eta t) + D eta^q / rho`.
pub fn recursion_closed_bound<S: Scalar>(p: &RecursionParams<S>, y1: S, t: usize) -> Result<S> {
    p.validate()?;
    let tt = S::from_usize_lossy(t);
    Ok(match p.step {
        StepRule::Constant { eta } => y1 * (-p.rho * eta * tt).exp() + p.d * eta.powi(p.q as i32) / p.rho,
        StepRule::Diminishing { beta } => {
            let mut ratio = S::one();
            let mut den = S::one();
            for j in 0..p.q {
                let j = S::from_u32(j).unwrap();
                ratio = ratio * (beta - j) / (tt + beta - j);
                den = den * (tt + beta - j);
            }
            let q = S::from_u32(p.q).unwrap();
            ratio * y1 + q.powi(p.q as i32 + 1) * p.d * (tt + beta).ln() / (p.rho.powi(p.q as i32 + 1) * den)
        }
    })
}

/// Tight constant-step bound `(1 - rho eta)^t Y_1 + D eta^q [1 - (1 - rho eta)^t] / rho`.
pub fn recursion_geometric_bound<S: Scalar>(p: &RecursionParams<S>, y1: S, t: usize) -> Result<S> {
    p.validate()?;
    match p.step {
        StepRule::Constant { eta } => {
            let r = (S::one() - p.rho * eta).powi(t as i32);
            Ok(r * y1 + p.d * eta.powi(p.q as i32) * (S::one() - r) / p.rho)
        }
        StepRule::Diminishing { .. } => Err(Error::Hypothesis("geometric form needs a constant step".into())),
    }
}

/// Classification of a user-supplied sequence `Y_1, Y_2, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceCheck {
    /// The sequence breaks the recursion at index `t` (1-based, `Y_{t+1}` too large).
    Inapplicable {
        t: usize,
    },
    Dominated,
    /// Meets the recursion but exceeds the closed bound at `Y_{t+1}`.
    Violated {
        t: usize,
    },
}

fn exceeds<S: Scalar>(y: S, bound: S, rel: S) -> bool {
    y > bound + rel * bound.abs().max(S::min_positive_value())
}

/// Checks `seq[t] <= step(seq[t-1])` then compares against the closed bound.
pub fn check_sequence<S: Scalar>(p: &RecursionParams<S>, seq: &[S]) -> Result<SequenceCheck> {
    p.validate()?;
    let rel = S::lit(1e-9);
    for t in 1..seq.len() {
        if exceeds(seq[t], p.step(seq[t - 1], t), rel) {
            return Ok(SequenceCheck::Inapplicable { t });
        }
    }
    for t in 1..seq.len() {
        if exceeds(seq[t], recursion_closed_bound(p, seq[0], t)?, rel) {
            return Ok(SequenceCheck::Violated { t });
        }
    }
    Ok(SequenceCheck::Dominated)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecursionReport<S> {
    pub horizon: usize,
    /// Smallest `(bound - Y_{t+1}) / |bound|` along the equality recursion.
    pub min_rel_slack: S,
    pub violations: usize,
    /// Same for the tight geometric form (constant step only).
    pub geometric_min_rel_slack: Option<S>,
    pub random_sequences: usize,
    pub random_violations: usize,
}

impl<S: Scalar> RecursionReport<S> {
    pub fn passes(&self) -> bool {
        self.violations == 0 && self.random_violations == 0
    }
}

/// Runs the recursion with equality to horizon `t_max`, comparing every
/// `Y_{t+1}` with its closed bound at relative tolerance `1e-9`. Also draws
/// `random_sequences` sequences from the same `Y_1` that satisfy the inequality
/// strictly, each of length `min(t_max, 1000)`.
pub fn verify_recursion_bound<S: Scalar>(
    p: &RecursionParams<S>,
    y1: S,
    t_max: usize,
    random_sequences: usize,
    seed: u64,
) -> Result<RecursionReport<S>> {
    p.validate()?;
    let rel = S::lit(1e-9);
    let bounds: Vec<S> = (1..=t_max).map(|t| recursion_closed_bound(p, y1, t)).collect::<Result<_>>()?;
    let mut report = RecursionReport {
        horizon: t_max,
        min_rel_slack: S::infinity(),
        violations: 0,
        geometric_min_rel_slack: None,
        random_sequences,
        random_violations: 0,
    };
    let is_const = matches!(p.step, StepRule::Constant { .. });
    let mut geo_min = S::infinity();
    let mut y = y1;
    for t in 1..=t_max {
        y = p.step(y, t);
        let b = bounds[t - 1];
        let denom = b.abs().max(S::min_positive_value());
        report.min_rel_slack = report.min_rel_slack.min((b - y) / denom);
        if exceeds(y, b, rel) {
            report.violations += 1;
        }
        if is_const {
            let g = recursion_geometric_bound(p, y1, t)?;
            geo_min = geo_min.min((g - y) / g.abs().max(S::min_positive_value()));
            if exceeds(y, g, rel) {
                report.violations += 1;
            }
        }
    }
    if is_const {
        report.geometric_min_rel_slack = Some(geo_min);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = t_max.min(1000);
    for _ in 0..random_sequences {
        let mut y = y1;
        let mut ok = true;
        for (t, &b) in (1..=len).zip(&bounds) {
            y = p.step(y, t) * S::lit(rng.gen::<f64>());
            ok &= !exceeds(y, b, rel);
        }
        if !ok {
            report.random_violations += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_first_step() {
        let p = RecursionParams { rho: 1.0, d: 0.0, q: 1, step: StepRule::Diminishing { beta: 1.0 } };
        assert_eq!(recursion_closed_bound(&p, 3.0, 1).unwrap(), 1.5);
    }

    #[test]
    fn second_order_substitution() {
        let p = RecursionParams { rho: 1.0, d: 1.0, q: 2, step: StepRule::Diminishing { beta: 2.0 } };
        let b = recursion_closed_bound(&p, 1.0, 3).unwrap();
        assert!((b - 0.743_775_164_973_640_2_f64).abs() < 1e-12, "{b}");
    }

    #[test]
    fn constant_step_limit_and_geometric_identity() {
        let p = RecursionParams { rho: 2.0, d: 0.5, q: 2, step: StepRule::Constant { eta: 0.1 } };
        let far = recursion_closed_bound(&p, 4.0, 100_000).unwrap();
        assert!((far - 0.5_f64 * 0.01 / 2.0).abs() < 1e-15);
        let p0 = RecursionParams { d: 0.0, ..p };
        let mut y = 4.0_f64;
        for t in 1..=50 {
            y = p0.step(y, t);
            let g = recursion_geometric_bound(&p0, 4.0, t).unwrap();
            assert!((y - g).abs() <= 1e-14 * g);
        }
    }

    #[test]
    fn hypotheses_are_enforced() {
        let bad_beta = RecursionParams { rho: 1.0, d: 1.0, q: 3, step: StepRule::Diminishing { beta: 1.5 } };
        assert!(recursion_closed_bound(&bad_beta, 1.0, 1).is_err());
        let small_beta = RecursionParams { rho: 1.0, d: 1.0, q: 1, step: StepRule::Diminishing { beta: 0.0 } };
        assert!(small_beta.validate().is_err());
        let bad_eta = RecursionParams { rho: 2.0, d: 1.0, q: 1, step: StepRule::Constant { eta: 0.5 } };
        assert!(bad_eta.validate().is_err());
    }

    #[test]
    fn perturbed_sequence_is_inapplicable() {
        let p = RecursionParams { rho: 1.0, d: 1.0, q: 1, step: StepRule::Diminishing { beta: 1.0 } };
        let mut seq = vec![1.0];
        for t in 1..20 {
            seq.push(p.step(seq[t - 1], t));
        }
        assert_eq!(check_sequence(&p, &seq).unwrap(), SequenceCheck::Dominated);
        seq[7] *= 1.5;
        assert_eq!(check_sequence(&p, &seq).unwrap(), SequenceCheck::Inapplicable { t: 7 });
    }
}
