use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// `((s + 1)^nu - s^nu, 1 / (2 s^{1 - nu}))`; the first never exceeds the second for `nu` in `[0, 1/2]`.
pub fn power_difference(s: f64, nu: f64) -> (f64, f64) {
    ((s + 1.0).powf(nu) - s.powf(nu), 0.5 / s.powf(1.0 - nu))
}

/// Whether `log(t + 1 + theta) / (t + beta)^c` is non-increasing over the sorted `grid`.
pub fn ratio_is_decreasing(c: f64, theta: f64, beta: f64, grid: &[f64]) -> bool {
    let f = |t: f64| (t + 1.0 + theta).ln() / (t + beta).powf(c);
    grid.windows(2).all(|w| {
        let (a, b) = (f(w[0]), f(w[1]));
        b <= a + 1e-12 * a.abs()
    })
}

/// Right-continuous non-increasing step function: value `values[k]` on `[breaks[k], breaks[k+1])`,
/// `values.last()` beyond the final break.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.is_empty() || breaks.len() != values.len() {
            return Err(Error::Argument("need one value per break".into()));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) || values.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Argument("breaks must increase and values must not".into()));
        }
        if values.last().is_some_and(|&v| v < 0.0) {
            return Err(Error::Argument("values must be nonnegative".into()));
        }
        Ok(Self { breaks, values })
    }

    /// Value at `x >= breaks[0]`.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.breaks.partition_point(|&b| b <= x);
        self.values[k.saturating_sub(1)]
    }

    /// Exact integral over `[a, b]` with `breaks[0] <= a <= b`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let mut total = 0.0;
        for k in 0..self.breaks.len() {
            let lo = self.breaks[k].max(a);
            let hi = self.breaks.get(k + 1).copied().unwrap_or(f64::INFINITY).min(b);
            if hi > lo {
                total += self.values[k] * (hi - lo);
            }
        }
        total
    }
}

/// `(sum_{i=t0+1}^{t} f(i), integral_{t0}^{t} f, sum_{i=t0}^{t-1} f(i))` for a non-increasing `f`.
pub fn integral_comparison(f: impl Fn(f64) -> f64, integral: f64, t0: u32, t: u32) -> (f64, f64, f64) {
    let lower: f64 = (t0 + 1..=t).map(|i| f(f64::from(i))).sum();
    let upper: f64 = (t0..t).map(|i| f(f64::from(i))).sum();
    (lower, integral, upper)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElementaryReport {
    pub draws: usize,
    pub power_difference_violations: usize,
    pub monotone_ratio_violations: usize,
    pub integral_violations: usize,
}

impl ElementaryReport {
    pub fn passes(&self) -> bool {
        self.power_difference_violations == 0 && self.monotone_ratio_violations == 0 && self.integral_violations == 0
    }
}

/// Random property checks of the three elementary inequalities, `draws` each.
pub fn elementary_inequalities_suite(draws: usize, seed: u64) -> ElementaryReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ElementaryReport {
        draws,
        power_difference_violations: 0,
        monotone_ratio_violations: 0,
        integral_violations: 0,
    };
    for _ in 0..draws {
        let s = 10f64.powf(rng.gen_range(-6.0..6.0));
        let nu = rng.gen_range(0.0..=0.5);
        let (lhs, rhs) = power_difference(s, nu);
        if lhs > rhs * (1.0 + 1e-12) {
            report.power_difference_violations += 1;
        }
    }
    for _ in 0..draws {
        let c: f64 = rng.gen_range(0.05..=1.0);
        let beta: f64 = rng.gen_range(0.0..20.0);
        let theta = beta - 1.0 + c * ((1.0 - c) / c).exp() + rng.gen_range(1e-6..5.0);
        let mut grid: Vec<f64> = (0..64).map(|_| rng.gen_range(0.0..1e4)).collect();
        grid.extend([0.0, 1e4]);
        grid.sort_by(f64::total_cmp);
        if !ratio_is_decreasing(c, theta, beta, &grid) {
            report.monotone_ratio_violations += 1;
        }
    }
    for _ in 0..draws {
        let k = rng.gen_range(1..12);
        let mut breaks: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..30.0)).collect();
        breaks.push(0.0);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut values: Vec<f64> = (0..breaks.len()).map(|_| rng.gen_range(0.0..10.0)).collect();
        values.sort_by(|a, b| b.total_cmp(a));
        let f = StepFunction::new(breaks, values).expect("constructed sorted");
        let t0 = rng.gen_range(0..20u32);
        let t = t0 + rng.gen_range(1..20u32);
        let (lo, mid, hi) = integral_comparison(|x| f.eval(x), f.integral(f64::from(t0), f64::from(t)), t0, t);
        let tol = 1e-12 * hi.max(1.0);
        if lo > mid + tol || mid > hi + tol {
            report.integral_violations += 1;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_difference_examples() {
        let (lhs, rhs) = power_difference(1.0, 0.5);
        assert!((lhs - (2f64.sqrt() - 1.0)).abs() < 1e-15 && rhs == 0.5);
        assert_eq!(power_difference(3.0, 0.0).0, 0.0);
    }

    #[test]
    fn harmonic_integral_example() {
        let (lo, mid, hi) = integral_comparison(|x| 1.0 / x, 3f64.ln(), 1, 3);
        assert!((lo - 5.0 / 6.0).abs() < 1e-15 && (hi - 1.5).abs() < 1e-15);
        assert!(lo <= mid && mid <= hi);
    }

    #[test]
    fn step_function_integral() {
        let f = StepFunction::new(vec![0.0, 1.5, 4.0], vec![3.0, 2.0, 0.5]).unwrap();
        assert_eq!(f.eval(1.5), 2.0);
        assert_eq!(f.eval(1.49), 3.0);
        assert_eq!(f.integral(1.0, 5.0), 0.5 * 3.0 + 2.5 * 2.0 + 0.5);
    }

    #[test]
    fn suite_finds_no_violations() {
        assert!(elementary_inequalities_suite(500, 9).passes());
    }

    #[test]
    fn inadmissible_offset_can_break_monotonicity() {
        // theta far below the threshold: the ratio increases near t = 0.
        let grid: Vec<f64> = (0..100).map(f64::from).collect();
        assert!(!ratio_is_decreasing(0.5, 0.0, 5.0, &grid));
    }
}
