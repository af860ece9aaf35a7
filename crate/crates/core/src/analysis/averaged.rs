use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Constants of the averaged recursion
/// `Y_{t+1} <= Y_t - rho eta_t^m Z_t + eta_t^q D` with `eta_t = gamma / (t + beta)^alpha`
/// and `Y_t <= C + H log(t + theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedParams<S> {
    pub rho: S,
    pub d: S,
    pub m: u32,
    pub q: u32,
    pub gamma: S,
    pub beta: S,
    pub alpha: S,
    pub c: S,
    pub h: S,
    pub theta: S,
    pub y1: S,
}

/// The four terms of the bound on `(1/T) sum_{t<=T} Z_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedBound<S> {
    pub y1_term: S,
    pub c_term: S,
    pub h_term: S,
    pub d_term: S,
    pub total: S,
}

impl<S: Scalar> AveragedParams<S> {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: S| x > S::zero() && x.is_finite();
        let nonneg = |x: S| x >= S::zero() && x.is_finite();
        let checks = [
            (pos(self.rho), "rho > 0"),
            (nonneg(self.d), "D >= 0"),
            (pos(self.gamma), "gamma > 0"),
            (pos(self.beta), "beta > 0"),
            (pos(self.alpha), "alpha > 0"),
            (nonneg(self.c), "C >= 0"),
            (nonneg(self.h), "H >= 0"),
            (pos(self.theta), "theta > 0"),
            (nonneg(self.y1), "Y_1 >= 0"),
            (self.m >= 1 && self.q > self.m, "q > m >= 1"),
        ];
        if let Some((_, msg)) = checks.iter().find(|(ok, _)| !ok) {
            return Err(Error::Hypothesis((*msg).into()));
        }
        let am = self.am();
        if am > S::lit(0.5) {
            return Err(Error::Hypothesis("alpha m <= 1/2".into()));
        }
        let c = S::one() - am;
        if !(S::one() + self.theta - self.beta > c * (am / c).exp()) {
            return Err(Error::Hypothesis("1 + theta - beta > (1 - alpha m) exp(alpha m / (1 - alpha m))".into()));
        }
        Ok(())
    }

    fn am(&self) -> S {
        self.alpha * S::from_u32(self.m).unwrap()
    }

    pub fn eta_at(&self, t: usize) -> S {
        self.gamma / (S::from_usize_lossy(t) + self.beta).powf(self.alpha)
    }
}

/// `sum_{t=1}^T (t + beta)^{-a}` is at most `A(T)`: `log((T + beta)/beta)` when
/// `a = 1`, `(T + beta)^{1-a} / (1 - a)` when `a < 1`, and the full integral
/// `(beta^{1-a} - (T + beta)^{1-a}) / (a - 1)` when `a > 1`.
pub(crate) fn tail_integral<S: Scalar>(t: S, beta: S, a: S) -> S {
    let one = S::one();
    if (a - one).abs() <= S::lit(1e-12) {
        (t + beta).ln() - beta.ln()
    } else if a < one {
        (t + beta).powf(one - a) / (one - a)
    } else {
        (beta.powf(one - a) - (t + beta).powf(one - a)) / (a - one)
    }
}

/// Right-hand side of the averaged bound for horizon `T`, split by term.
pub fn averaged_bound<S: Scalar>(p: &AveragedParams<S>, t_max: usize) -> Result<AveragedBound<S>> {
    p.validate()?;
    if t_max == 0 {
        return Err(Error::Argument("T must be at least 1".into()));
    }
    let t = S::from_usize_lossy(t_max);
    let am = p.am();
    let gm = p.gamma.powi(p.m as i32);
    let two_rho_am_gm = S::lit(2.0) * p.rho * am * gm;
    let grow = (t - S::one() + p.beta).powf(am);
    let y1_term = (S::one() + p.beta).powf(am) * p.y1 / (p.rho * gm) / t;
    let c_term = p.c * grow / two_rho_am_gm / t;
    let h_term = p.h * grow * (t + p.theta).ln() / two_rho_am_gm / t;
    let a = p.alpha * S::from_u32(p.q - p.m).unwrap();
    let d_term = p.d * p.gamma.powi((p.q - p.m) as i32) / p.rho * tail_integral(t, p.beta, a) / t;
    Ok(AveragedBound { y1_term, c_term, h_term, d_term, total: y1_term + c_term + h_term + d_term })
}

/// How `Z_t` is chosen in [`verify_averaged_bound`]: as a fraction `u_t` of its largest admissible value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZPolicy {
    /// `u_t = 1`.
    Maximal,
    /// `u_t` uniform on `[0, 1)`.
    Uniform { seed: u64 },
    /// `u_t = 0`.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AveragedReport<S> {
    pub average_z: S,
    /// Parameters with `C` raised to the smallest value meeting `Y_t <= C + H log(t + theta)`.
    pub params: AveragedParams<S>,
    pub bound: AveragedBound<S>,
    pub holds: bool,
}

/// Builds `(Y_t, Z_t)` meeting the recursion with equality,
/// `Z_t = u_t (Y_t + eta_t^q D) / (rho eta_t^m)`, and compares the average of `Z_t`
/// with [`averaged_bound`]. `C` is raised as needed so the growth hypothesis holds.
pub fn verify_averaged_bound<S: Scalar>(
    p: &AveragedParams<S>,
    t_max: usize,
    policy: ZPolicy,
) -> Result<AveragedReport<S>> {
    p.validate()?;
    let mut rng = match policy {
        ZPolicy::Uniform { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut y = p.y1;
    let mut c_needed = S::zero();
    let mut z_sum = S::zero();
    for t in 1..=t_max {
        c_needed = c_needed.max(y - p.h * (S::from_usize_lossy(t) + p.theta).ln());
        let eta = p.eta_at(t);
        let noise = eta.powi(p.q as i32) * p.d;
        let u = match policy {
            ZPolicy::Maximal => S::one(),
            ZPolicy::Zero => S::zero(),
            ZPolicy::Uniform { .. } => S::lit(rng.as_mut().expect("seeded above").gen::<f64>()),
        };
        let z = u * (y + noise) / (p.rho * eta.powi(p.m as i32));
        z_sum = z_sum + z;
        y = ((S::one() - u) * (y + noise)).max(S::zero());
    }
    c_needed = c_needed.max(y - p.h * (S::from_usize_lossy(t_max + 1) + p.theta).ln());
    let params = AveragedParams { c: p.c.max(c_needed), ..*p };
    let bound = averaged_bound(&params, t_max)?;
    let average_z = z_sum / S::from_usize_lossy(t_max);
    let holds = average_z <= bound.total * (S::one() + S::lit(1e-9));
    Ok(AveragedReport { average_z, params, bound, holds })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> AveragedParams<f64> {
        AveragedParams {
            rho: 0.25,
            d: 1.7,
            m: 1,
            q: 3,
            gamma: 1.0,
            beta: 1.0,
            alpha: 0.5,
            c: 2.3,
            h: 0.0,
            theta: 2.0,
            y1: 0.9,
        }
    }

    #[test]
    fn half_power_matches_display_term_by_term() {
        let p = base();
        let t = 50.0;
        let b = averaged_bound(&p, 50).unwrap();
        let close = |a: f64, e: f64| (a - e).abs() <= 1e-13 * e.abs().max(1.0);
        assert!(close(b.y1_term, 4.0 * 2f64.sqrt() * p.y1 / p.gamma / t));
        assert!(close(b.c_term, 4.0 * p.c / p.gamma * (t - 1.0 + p.beta).sqrt() / t));
        assert!(close(b.d_term, 4.0 * p.d * p.gamma.powi(2) * ((t + p.beta).ln() - p.beta.ln()) / t));
        assert_eq!(b.h_term, 0.0);
    }

    #[test]
    fn log_branch_selected_exactly_at_unit_exponent() {
        assert_eq!(tail_integral(10.0, 2.0, 1.0), 12f64.ln() - 2f64.ln());
        assert!(tail_integral(10.0, 2.0, 1.0 + 1e-6) > 0.0);
        assert!(tail_integral(10.0, 2.0, 1.5) > 0.0);
    }

    #[test]
    fn single_term_collapse() {
        let p = AveragedParams { c: 0.0, d: 0.0, h: 0.0, ..base() };
        let b = averaged_bound(&p, 1).unwrap();
        assert_eq!(b.total, b.y1_term);
        assert!(b.total.is_finite() && b.total >= 2f64.sqrt() * p.y1 / (p.rho * p.gamma));
    }

    #[test]
    fn trajectories_stay_below_bound() {
        for policy in [ZPolicy::Maximal, ZPolicy::Uniform { seed: 3 }, ZPolicy::Zero] {
            let r = verify_averaged_bound(&base(), 2000, policy).unwrap();
            assert!(r.holds, "{policy:?}: {} > {}", r.average_z, r.bound.total);
        }
        let with_log = AveragedParams { h: 0.8, alpha: 1.0 / 3.0, ..base() };
        assert!(verify_averaged_bound(&with_log, 2000, ZPolicy::Maximal).unwrap().holds);
        let zero = AveragedParams { d: 0.0, ..base() };
        let r = verify_averaged_bound(&zero, 100, ZPolicy::Zero).unwrap();
        assert_eq!(r.average_z, 0.0);
    }

    #[test]
    fn hypotheses_are_enforced() {
        assert!(AveragedParams { alpha: 0.6, ..base() }.validate().is_err());
        assert!(AveragedParams { q: 1, ..base() }.validate().is_err());
        assert!(AveragedParams { theta: 0.2, ..base() }.validate().is_err());
    }
}
