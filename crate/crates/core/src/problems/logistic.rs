use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::FiniteSumProblem;

/// Regularization weight used by the logistic experiments.
pub const DEFAULT_LAMBDA: f64 = 0.01;

/// Binary logistic loss with the nonconvex penalty `(lambda/2) sum_j w_j^2 / (1 + w_j^2)`.
#[derive(Debug, Clone)]
pub struct LogisticNonconvex<S: Scalar> {
    indices: Vec<Vec<usize>>,
    values: Vec<Vec<S>>,
    labels: Vec<S>,
    lambda: S,
    d: usize,
    max_row_norm_sq: S,
    mean_row_norm_sq: S,
}

/// `log(1 + exp(z))` without overflow.
pub(crate) fn softplus<S: Scalar>(z: S) -> S {
    z.max(S::zero()) + (-z.abs()).exp().ln_1p()
}

/// `1 / (1 + exp(-u))` without overflow.
pub(crate) fn sigmoid<S: Scalar>(u: S) -> S {
    if u >= S::zero() {
        S::one() / (S::one() + (-u).exp())
    } else {
        let e = u.exp();
        e / (S::one() + e)
    }
}

impl<S: Scalar> LogisticNonconvex<S> {
    pub fn new(dataset: &Dataset, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::Argument(format!("lambda must be nonnegative, got {lambda}")));
        }
        let values: Vec<Vec<S>> =
            dataset.rows().iter().map(|r| r.values.iter().map(|&v| S::lit(v)).collect()).collect();
        let norms: Vec<S> = values.iter().map(|v: &Vec<S>| v.iter().fold(S::zero(), |a, &x| a + x * x)).collect();
        let max_row_norm_sq = norms.iter().copied().fold(S::zero(), S::max);
        let mean_row_norm_sq = norms.iter().copied().sum::<S>() / S::from_usize_lossy(norms.len().max(1));
        Ok(Self {
            indices: dataset.rows().iter().map(|r| r.indices.clone()).collect(),
            values,
            labels: dataset.labels().iter().map(|&y| S::lit(y)).collect(),
            lambda: S::lit(lambda),
            d: dataset.d(),
            max_row_norm_sq,
            mean_row_norm_sq,
        })
    }

    pub fn lambda(&self) -> S {
        self.lambda
    }

    /// `(Theta, sigma^2) = (0, mean_i |x_i|^2)` bounds the component-gradient variance
    /// everywhere: the penalty cancels and the loss derivative lies in `[-1, 1]`.
    pub fn variance_constants(&self) -> (S, S) {
        (S::zero(), self.mean_row_norm_sq)
    }

    fn margin(&self, w: &[S], i: usize) -> S {
        self.indices[i].iter().zip(&self.values[i]).fold(S::zero(), |acc, (&j, &v)| acc + v * w[j])
    }

    fn penalty(&self, w: &[S]) -> S {
        let s = w.iter().fold(S::zero(), |acc, &x| {
            let x2 = x * x;
            acc + x2 / (S::one() + x2)
        });
        self.lambda * S::lit(0.5) * s
    }
}

impl<S: Scalar> FiniteSumProblem<S> for LogisticNonconvex<S> {
    fn n(&self) -> usize {
        self.labels.len()
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn value_at(&self, w: &[S], i: usize) -> S {
        softplus(-self.labels[i] * self.margin(w, i)) + self.penalty(w)
    }

    fn grad_at(&self, w: &[S], i: usize, out: &mut [S]) {
        for (o, &x) in out.iter_mut().zip(w) {
            let t = S::one() + x * x;
            *o = self.lambda * x / (t * t);
        }
        let y = self.labels[i];
        let coef = -y * sigmoid(-y * self.margin(w, i));
        for (&j, &v) in self.indices[i].iter().zip(&self.values[i]) {
            out[j] = out[j] + coef * v;
        }
    }

    /// `max_i |x_i|^2 / 4 + lambda`: the penalty's per-coordinate curvature is at most `lambda`.
    fn smoothness(&self) -> S {
        self.max_row_norm_sq / S::lit(4.0) + self.lambda
    }
}

/// Fraction of rows with `y * x^T w > 0`; ties count as errors.
pub fn accuracy<S: Scalar>(dataset: &Dataset, w: &[S]) -> f64 {
    let correct = dataset
        .rows()
        .iter()
        .zip(dataset.labels())
        .filter(|(row, &y)| {
            let m: f64 = row.iter().filter(|&(j, _)| j < w.len()).map(|(j, v)| v * w[j].to_f64_lossy()).sum();
            y * m > 0.0
        })
        .count();
    correct as f64 / dataset.n() as f64
}
