use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Least-squares line through `(ln t, ln value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit<S> {
    pub slope: S,
    pub intercept: S,
    pub window: (S, S),
    pub r_squared: S,
    pub points: usize,
}

/// Fits `ln(value) = intercept + slope ln(t)` over points with `t` in `window`
/// (inclusive). The default window is `[ceil(T/2), T]` with `T` the largest `t`.
pub fn fit_loglog_slope<S: Scalar>(series: &[(S, S)], window: Option<(S, S)>) -> Result<SlopeFit<S>> {
    let t_max = series.iter().map(|&(t, _)| t).fold(S::neg_infinity(), S::max);
    let (lo, hi) = window.unwrap_or(((t_max / S::lit(2.0)).ceil(), t_max));
    if !(lo < hi) {
        return Err(Error::Argument(format!("empty window [{lo}, {hi}]")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(t, v) in series.iter().filter(|&&(t, _)| t >= lo && t <= hi) {
        if !(t > S::zero()) {
            return Err(Error::Argument(format!("nonpositive abscissa {t}")));
        }
        if !(v > S::zero()) {
            return Err(Error::Argument(format!("nonpositive value {v} at t = {t}")));
        }
        xs.push(t.ln());
        ys.push(v.ln());
    }
    let k = xs.len();
    if k < 5 {
        return Err(Error::Argument(format!("need at least 5 points in the window, found {k}")));
    }
    let m = S::from_usize_lossy(k);
    let mx = xs.iter().copied().sum::<S>() / m;
    let my = ys.iter().copied().sum::<S>() / m;
    let sxx: S = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    let sxy: S = xs.iter().zip(&ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let syy: S = ys.iter().map(|&y| (y - my) * (y - my)).sum();
    if !(sxx > S::zero()) {
        return Err(Error::Argument("window contains a single abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: S = xs.iter().zip(&ys).map(|(&x, &y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy > S::zero() { S::one() - sse / syy } else { S::one() };
    Ok(SlopeFit { slope, intercept, window: (lo, hi), r_squared, points: k })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let s: Vec<(f64, f64)> = (1..=100).map(|t| (f64::from(t), f64::from(t).powi(-2))).collect();
        let f = fit_loglog_slope(&s, None).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-9);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(f.window, (50.0, 100.0));
        assert_eq!(f.points, 51);
    }

    #[test]
    fn constant_series_has_zero_slope() {
        let s: Vec<(f64, f64)> = (1..=20).map(|t| (f64::from(t), 3.0)).collect();
        assert!(fit_loglog_slope(&s, None).unwrap().slope.abs() < 1e-12);
    }

    #[test]
    fn log_corrected_decay() {
        let s: Vec<(f64, f64)> = (1..=100).map(|t| (f64::from(t), f64::from(t).ln() / f64::from(t).powi(2))).collect();
        let f = fit_loglog_slope(&s, Some((50.0, 100.0))).unwrap();
        assert!(f.slope > -2.0 && f.slope < -1.7, "{}", f.slope);
    }

    #[test]
    fn rejects_bad_input() {
        let s = vec![(1.0, 1.0), (2.0, 0.0), (3.0, 1.0), (4.0, 1.0), (5.0, 1.0)];
        assert!(fit_loglog_slope(&s, Some((1.0, 5.0))).is_err());
        let short = vec![(1.0, 1.0), (2.0, 1.0)];
        assert!(fit_loglog_slope(&short, None).is_err());
    }
}
