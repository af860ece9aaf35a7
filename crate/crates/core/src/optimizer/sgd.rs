use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problems::FiniteSumProblem;
use crate::scalar::{norm_sq, Scalar};
use crate::schedules::Schedule;

use super::Divergence;

/// Metrics at iterate `w_t`, before step `t` is taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdRecord<S> {
    pub t: usize,
    pub eta_t: S,
    pub f_val: S,
    pub grad_norm_sq: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdTrace<S> {
    pub seed: u64,
    pub records: Vec<SgdRecord<S>>,
    pub final_w: Vec<S>,
    pub divergence: Option<Divergence>,
}

/// Plain SGD, `w_{t+1} = w_t - eta_t grad f(w_t; xi_t)` with `xi_t` uniform on `0..n`.
/// Starts from `w1`; records every `record_every` iterations.
pub fn run_sgd_baseline<S: Scalar, P: FiniteSumProblem<S> + ?Sized>(
    problem: &P,
    schedule: &Schedule<S>,
    iters: usize,
    seed: u64,
    w1: &[S],
    record_every: usize,
) -> Result<SgdTrace<S>> {
    if iters == 0 || record_every == 0 {
        return Err(Error::Config("iteration count and record interval must be positive".into()));
    }
    if w1.len() != problem.dim() {
        return Err(Error::DimensionMismatch { expected: problem.dim(), got: w1.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = problem.n();
    let mut w = w1.to_vec();
    let mut g = vec![S::zero(); w.len()];
    let mut trace = SgdTrace { seed, records: Vec::new(), final_w: Vec::new(), divergence: None };
    for t in 1..=iters {
        let eta = schedule.eta_at(t);
        if (t - 1) % record_every == 0 {
            trace.records.push(SgdRecord {
                t,
                eta_t: eta,
                f_val: problem.full_value(&w),
                grad_norm_sq: norm_sq(&problem.full_grad(&w)),
            });
        }
        let i = rng.gen_range(0..n);
        problem.grad_at(&w, i, &mut g);
        let mut finite = true;
        for (x, &gi) in w.iter_mut().zip(&g) {
            *x = *x - eta * gi;
            finite &= x.is_finite();
        }
        if !finite {
            trace.divergence = Some(Divergence { epoch: t, inner: 1 });
            break;
        }
    }
    trace.final_w = w;
    Ok(trace)
}
