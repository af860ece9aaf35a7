//! Finite-sum objectives `F(w) = (1/n) sum_i f(w; i)` and their constants.

mod logistic;
mod quadratic;

pub use logistic::{accuracy, LogisticNonconvex, DEFAULT_LAMBDA};
pub use quadratic::{QuadraticSC, RandomQuadratic};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dist_sq, norm_sq, pairwise_sum, pairwise_vec_sum, Scalar};

/// Component oracle for a finite-sum problem.
///
/// Implementors provide the unchecked `value_at` / `grad_at`; the `comp_*`
/// wrappers validate the index and dimension.
pub trait FiniteSumProblem<S: Scalar>: Send + Sync {
    fn n(&self) -> usize;
    fn dim(&self) -> usize;

    /// `f(w; i)`; requires `i < n()` and `w.len() == dim()`.
    fn value_at(&self, w: &[S], i: usize) -> S;

    /// Writes `grad f(w; i)` into `out`; same requirements as [`value_at`](Self::value_at).
    fn grad_at(&self, w: &[S], i: usize, out: &mut [S]);

    /// Upper bound on the Lipschitz constant of every component gradient.
    fn smoothness(&self) -> S;

    fn strong_convexity(&self) -> Option<S> {
        None
    }

    fn minimizer(&self) -> Option<&[S]> {
        None
    }

    fn optimal_value(&self) -> Option<S> {
        None
    }

    /// Whether every component is convex.
    fn components_convex(&self) -> bool {
        false
    }

    /// `F(w) - F*` when `F*` is known.
    fn optimality_gap(&self, w: &[S]) -> Option<S> {
        self.optimal_value().map(|f| self.full_value(w) - f)
    }

    fn comp_value(&self, w: &[S], i: usize) -> Result<S> {
        self.check(w, i)?;
        Ok(self.value_at(w, i))
    }

    fn comp_grad(&self, w: &[S], i: usize) -> Result<Vec<S>> {
        self.check(w, i)?;
        let mut g = vec![S::zero(); self.dim()];
        self.grad_at(w, i, &mut g);
        Ok(g)
    }

    fn full_value(&self, w: &[S]) -> S {
        pairwise_sum(self.n(), &|i| self.value_at(w, i)) / S::from_usize_lossy(self.n())
    }

    fn full_grad(&self, w: &[S]) -> Vec<S> {
        let n = S::from_usize_lossy(self.n());
        let mut g = pairwise_vec_sum(self.n(), self.dim(), &|i, out: &mut [S]| self.grad_at(w, i, out));
        g.iter_mut().for_each(|x| *x = *x / n);
        g
    }

    #[doc(hidden)]
    fn check(&self, w: &[S], i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(Error::IndexOutOfRange { index: i, n: self.n() });
        }
        if w.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: w.len() });
        }
        Ok(())
    }
}

/// Population variance of the component gradients at `w`:
/// `(1/n) sum_i |grad f(w;i) - grad F(w)|^2`.
pub fn component_variance<S: Scalar, P: FiniteSumProblem<S> + ?Sized>(problem: &P, w: &[S]) -> S {
    let g = problem.full_grad(w);
    spread_around(problem, w, &g)
}

fn spread_around<S: Scalar, P: FiniteSumProblem<S> + ?Sized>(problem: &P, w: &[S], center: &[S]) -> S {
    let d = problem.dim();
    let total = pairwise_sum(problem.n(), &|i| {
        let mut gi = vec![S::zero(); d];
        problem.grad_at(w, i, &mut gi);
        dist_sq(&gi, center)
    });
    total / S::from_usize_lossy(problem.n())
}

/// Tolerance used for the stationarity precondition of [`sigma_star`].
pub fn stationarity_tolerance<S: Scalar>(w: &[S]) -> S {
    let base = S::lit(1e-8).max(S::lit(1e3) * S::epsilon());
    base * S::one().max(norm_sq(w).sqrt())
}

/// Mean squared component-gradient norm at a stationary point `w_star`.
pub fn sigma_star<S: Scalar, P: FiniteSumProblem<S> + ?Sized>(problem: &P, w_star: &[S]) -> Result<S> {
    if w_star.len() != problem.dim() {
        return Err(Error::DimensionMismatch { expected: problem.dim(), got: w_star.len() });
    }
    let residual = norm_sq(&problem.full_grad(w_star)).sqrt();
    let tolerance = stationarity_tolerance(w_star);
    if !(residual <= tolerance) {
        return Err(Error::NotStationary { residual: residual.to_f64_lossy(), tolerance: tolerance.to_f64_lossy() });
    }
    let zero = vec![S::zero(); problem.dim()];
    Ok(spread_around(problem, w_star, &zero))
}

/// Constants consumed by schedule presets, validity checks and audits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ProblemConstants<S: Scalar> {
    pub l_hat: S,
    pub mu: Option<S>,
    pub kappa: Option<S>,
    pub theta_hat: S,
    pub sigma_sq_hat: S,
    pub sigma_star_sq: Option<S>,
    pub tau: Option<S>,
    /// True when `theta_hat` / `sigma_sq_hat` are fitted rather than known.
    pub estimated: bool,
}

impl<S: Scalar> ProblemConstants<S> {
    /// Constants with `L` only; everything else zero or unknown.
    pub fn with_smoothness(l_hat: S) -> Self {
        Self {
            l_hat,
            mu: None,
            kappa: None,
            theta_hat: S::zero(),
            sigma_sq_hat: S::zero(),
            sigma_star_sq: None,
            tau: None,
            estimated: false,
        }
    }

    /// Whether `variance <= theta * grad_sq + sigma^2` within relative tolerance `rel`.
    pub fn variance_bound_holds(&self, variance: S, grad_sq: S, rel: S) -> bool {
        let rhs = self.theta_hat * grad_sq + self.sigma_sq_hat;
        variance <= rhs + rel * S::one().max(rhs.abs())
    }
}

/// One `(|grad F(w)|^2, variance)` pair observed at a probe point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceProbe<S> {
    pub grad_norm_sq: S,
    pub variance: S,
}

/// Evaluates the variance probe at `w`.
pub fn variance_probe<S: Scalar, P: FiniteSumProblem<S> + ?Sized>(problem: &P, w: &[S]) -> VarianceProbe<S> {
    let g = problem.full_grad(w);
    VarianceProbe { grad_norm_sq: norm_sq(&g), variance: spread_around(problem, w, &g) }
}

/// Fits `(theta, sigma^2)` so that `variance <= theta * grad_sq + sigma^2` on every probe:
/// theta is the least-squares slope clamped at zero, sigma^2 the smallest intercept
/// making the fit feasible.
pub fn fit_variance_bound<S: Scalar>(probes: &[VarianceProbe<S>]) -> (S, S) {
    let k = S::from_usize_lossy(probes.len());
    let mean_g = probes.iter().map(|p| p.grad_norm_sq).sum::<S>() / k;
    let mean_v = probes.iter().map(|p| p.variance).sum::<S>() / k;
    let sxx: S = probes.iter().map(|p| (p.grad_norm_sq - mean_g).powi(2)).sum();
    let sxy: S = probes.iter().map(|p| (p.grad_norm_sq - mean_g) * (p.variance - mean_v)).sum();
    let theta = if sxx > S::zero() { (sxy / sxx).max(S::zero()) } else { S::zero() };
    let sigma_sq = probes.iter().map(|p| p.variance - theta * p.grad_norm_sq).fold(S::zero(), S::max);
    (theta, sigma_sq)
}

/// Estimates the problem constants; `theta_hat` / `sigma_sq_hat` come from
/// [`fit_variance_bound`] over `probe_points`.
pub fn estimate_constants<S: Scalar, P: FiniteSumProblem<S> + ?Sized>(
    problem: &P,
    probe_points: &[Vec<S>],
) -> Result<ProblemConstants<S>> {
    if probe_points.is_empty() {
        return Err(Error::Argument("at least one probe point is required".into()));
    }
    let probes = probe_points
        .iter()
        .map(|w| {
            if w.len() != problem.dim() {
                return Err(Error::DimensionMismatch { expected: problem.dim(), got: w.len() });
            }
            Ok(variance_probe(problem, w))
        })
        .collect::<Result<Vec<_>>>()?;
    let (theta_hat, sigma_sq_hat) = fit_variance_bound(&probes);
    let l_hat = problem.smoothness();
    let mu = problem.strong_convexity();
    let sigma_star_sq = problem.minimizer().map(|w| sigma_star(problem, w)).transpose()?;
    Ok(ProblemConstants {
        l_hat,
        mu,
        kappa: mu.map(|m| l_hat / m),
        theta_hat,
        sigma_sq_hat,
        sigma_star_sq,
        tau: mu.map(|m| S::one() / (S::lit(2.0) * m)),
        estimated: true,
    })
}

/// Full-gradient descent with Armijo backtracking; returns the final point and
/// value. Serves as a reference `F*` when the optimum is not known in closed form.
pub fn reference_minimum<S: Scalar, P: FiniteSumProblem<S> + ?Sized>(
    problem: &P,
    w0: &[S],
    max_iters: usize,
    grad_tol: S,
) -> (Vec<S>, S) {
    let mut w = w0.to_vec();
    let mut f = problem.full_value(&w);
    let mut step = S::one() / problem.smoothness();
    let half = S::lit(0.5);
    for _ in 0..max_iters {
        let g = problem.full_grad(&w);
        let g2 = norm_sq(&g);
        if g2.sqrt() <= grad_tol {
            break;
        }
        step = step * S::lit(2.0);
        let mut accepted = false;
        while step >= S::epsilon() {
            let trial: Vec<S> = w.iter().zip(&g).map(|(&x, &gx)| x - step * gx).collect();
            let ft = problem.full_value(&trial);
            if ft <= f - half * step * g2 {
                w = trial;
                f = ft;
                accepted = true;
                break;
            }
            step = step * half;
        }
        if !accepted {
            break;
        }
    }
    (w, f)
}
