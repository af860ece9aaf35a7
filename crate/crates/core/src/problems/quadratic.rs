use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, Scalar};

use super::FiniteSumProblem;

/// Sum of diagonal quadratics `f(w; i) = 0.5 (w - a_i)^T Q_i (w - a_i)`.
///
/// Individual `Q_i` may be indefinite; their average must be positive definite.
#[derive(Debug, Clone)]
pub struct QuadraticSC<S: Scalar> {
    centers: Vec<Vec<S>>,
    diags: Vec<Vec<S>>,
    q_bar: Vec<S>,
    w_star: Vec<S>,
    f_star: S,
    mu: S,
    l: S,
    convex: bool,
}

/// Generator for random instances with diagonal entries drawn from `curvature`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomQuadratic {
    pub n: usize,
    pub d: usize,
    /// Range of the diagonal entries of each `Q_i`.
    pub curvature: (f64, f64),
    /// Centers are drawn uniformly from `[-spread, spread]^d`.
    pub spread: f64,
}

impl<S: Scalar> QuadraticSC<S> {
    pub fn new(centers: Vec<Vec<S>>, diags: Vec<Vec<S>>) -> Result<Self> {
        let n = centers.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        if diags.len() != n {
            return Err(Error::Argument(format!("{n} centers but {} scale matrices", diags.len())));
        }
        let d = centers[0].len();
        for v in centers.iter().chain(&diags) {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: v.len() });
            }
        }
        let nn = S::from_usize_lossy(n);
        let q_bar: Vec<S> = (0..d).map(|j| pairwise_sum(n, &|i| diags[i][j]) / nn).collect();
        let mu = q_bar.iter().copied().fold(S::infinity(), S::min);
        if !(mu > S::zero()) {
            return Err(Error::Argument("average scale matrix is not positive definite".into()));
        }
        let w_star: Vec<S> =
            (0..d).map(|j| pairwise_sum(n, &|i| diags[i][j] * centers[i][j]) / nn / q_bar[j]).collect();
        let l = diags.iter().flatten().fold(S::zero(), |a, &q| a.max(q.abs()));
        let convex = diags.iter().flatten().all(|&q| q >= S::zero());
        let mut out = Self { centers, diags, q_bar, w_star, f_star: S::zero(), mu, l, convex };
        out.f_star = out.full_value(&out.w_star.clone());
        Ok(out)
    }

    pub fn random(spec: &RandomQuadratic, seed: u64) -> Result<Self> {
        let (lo, hi) = spec.curvature;
        if !(lo <= hi) || spec.n == 0 || spec.d == 0 {
            return Err(Error::Argument("invalid random quadratic spec".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut centers = Vec::with_capacity(spec.n);
        let mut diags = Vec::with_capacity(spec.n);
        for _ in 0..spec.n {
            centers.push((0..spec.d).map(|_| S::lit(rng.gen_range(-1.0..=1.0) * spec.spread)).collect());
            diags.push((0..spec.d).map(|_| S::lit(rng.gen_range(lo..=hi))).collect());
        }
        Self::new(centers, diags)
    }

    pub fn centers(&self) -> &[Vec<S>] {
        &self.centers
    }

    pub fn diags(&self) -> &[Vec<S>] {
        &self.diags
    }

    /// Diagonal of the averaged scale matrix.
    pub fn q_bar(&self) -> &[S] {
        &self.q_bar
    }

    /// `F(w) - F* = 0.5 (w - w*)^T Qbar (w - w*)`, free of cancellation.
    pub fn exact_gap(&self, w: &[S]) -> S {
        let half = S::lit(0.5);
        w.iter()
            .zip(&self.w_star)
            .zip(&self.q_bar)
            .fold(S::zero(), |acc, ((&x, &xs), &q)| acc + half * q * (x - xs) * (x - xs))
    }

    /// Global `(Theta, sigma^2)` with `variance(w) <= Theta |grad F(w)|^2 + sigma^2` for all `w`.
    ///
    /// Per coordinate the variance is `A u^2 + 2 B u + C` in `u = w - w*`, with
    /// `|grad F|^2 = sum_j qbar_j^2 u_j^2`. Taking `Theta = 2 max_j A_j / qbar_j^2`
    /// leaves `sigma^2 = sum_j C_j + B_j^2 / (Theta qbar_j^2 - A_j)`.
    pub fn variance_constants(&self) -> (S, S) {
        let n = S::from_usize_lossy(self.centers.len());
        let d = self.q_bar.len();
        let mut abc = vec![(S::zero(), S::zero(), S::zero()); d];
        for (a, q) in self.centers.iter().zip(&self.diags) {
            for j in 0..d {
                let dev = q[j] - self.q_bar[j];
                let g = q[j] * (self.w_star[j] - a[j]);
                abc[j].0 = abc[j].0 + dev * dev / n;
                abc[j].1 = abc[j].1 + dev * g / n;
                abc[j].2 = abc[j].2 + g * g / n;
            }
        }
        let theta = S::lit(2.0) * abc.iter().zip(&self.q_bar).fold(S::zero(), |m, (&(a, _, _), &q)| m.max(a / (q * q)));
        let sigma_sq = abc.iter().zip(&self.q_bar).fold(S::zero(), |acc, (&(a, b, c), &q)| {
            let slack = theta * q * q - a;
            acc + c + if b == S::zero() { S::zero() } else { b * b / slack }
        });
        (theta, sigma_sq)
    }
}

impl<S: Scalar> FiniteSumProblem<S> for QuadraticSC<S> {
    fn n(&self) -> usize {
        self.centers.len()
    }

    fn dim(&self) -> usize {
        self.q_bar.len()
    }

    fn value_at(&self, w: &[S], i: usize) -> S {
        let s = w
            .iter()
            .zip(&self.centers[i])
            .zip(&self.diags[i])
            .fold(S::zero(), |acc, ((&x, &a), &q)| acc + q * (x - a) * (x - a));
        S::lit(0.5) * s
    }

    fn grad_at(&self, w: &[S], i: usize, out: &mut [S]) {
        for (((o, &x), &a), &q) in out.iter_mut().zip(w).zip(&self.centers[i]).zip(&self.diags[i]) {
            *o = q * (x - a);
        }
    }

    fn smoothness(&self) -> S {
        self.l
    }

    fn strong_convexity(&self) -> Option<S> {
        Some(self.mu)
    }

    fn minimizer(&self) -> Option<&[S]> {
        Some(&self.w_star)
    }

    fn optimal_value(&self) -> Option<S> {
        Some(self.f_star)
    }

    fn components_convex(&self) -> bool {
        self.convex
    }

    fn optimality_gap(&self, w: &[S]) -> Option<S> {
        Some(self.exact_gap(w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{component_variance, estimate_constants, sigma_star};

    fn one_d() -> QuadraticSC<f64> {
        QuadraticSC::new(vec![vec![0.0], vec![2.0]], vec![vec![1.0], vec![1.0]]).unwrap()
    }

    #[test]
    fn one_dimensional_hand_example() {
        let q = one_d();
        assert_eq!(q.minimizer().unwrap(), &[1.0]);
        assert_eq!(q.optimal_value().unwrap(), 0.5);
        assert_eq!(q.strong_convexity(), Some(1.0));
        assert_eq!(q.smoothness(), 1.0);
        assert_eq!(sigma_star(&q, &[1.0]).unwrap(), 1.0);
        assert_eq!(component_variance(&q, &[1.0]), 1.0);
        let c = estimate_constants(&q, &[vec![1.0], vec![3.0]]).unwrap();
        assert_eq!((c.l_hat, c.kappa, c.tau), (1.0, Some(1.0), Some(0.5)));
        assert_eq!(c.sigma_star_sq, Some(1.0));
    }

    #[test]
    fn gradient_vanishes_at_component_center() {
        let q = one_d();
        assert_eq!(q.comp_grad(&[2.0], 1).unwrap(), vec![0.0]);
    }

    #[test]
    fn shared_minimizer_gives_zero_sigma_star() {
        let q =
            QuadraticSC::new(vec![vec![1.0, -1.0]; 3], vec![vec![1.0, 2.0], vec![3.0, 1.0], vec![0.5, 0.5]]).unwrap();
        assert_eq!(sigma_star(&q, &[1.0, -1.0]).unwrap(), 0.0);
        let single = QuadraticSC::new(vec![vec![0.3]], vec![vec![2.0]]).unwrap();
        assert_eq!(sigma_star(&single, &[0.3]).unwrap(), 0.0);
    }

    #[test]
    fn sigma_star_rejects_non_stationary_point() {
        let q = one_d();
        assert!(matches!(sigma_star(&q, &[0.0]), Err(Error::NotStationary { .. })));
    }

    #[test]
    fn indefinite_average_is_rejected() {
        assert!(QuadraticSC::<f64>::new(vec![vec![0.0], vec![1.0]], vec![vec![1.0], vec![-1.0]]).is_err());
        let q = QuadraticSC::<f64>::new(vec![vec![0.0], vec![1.0]], vec![vec![3.0], vec![-1.0]]).unwrap();
        assert!(!q.components_convex());
        assert_eq!(q.smoothness(), 3.0);
    }
}
