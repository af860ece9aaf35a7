//! Epoch learning rates `eta_t` (the inner step is always `eta_t / n`),
//! preset constructors and their validity conditions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::ProblemConstants;
use crate::scalar::Scalar;

/// Functional form of the epoch learning rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScheduleKind<S> {
    Constant {
        eta: S,
    },
    /// `gamma / (t + beta)^alpha`.
    PolyDecay {
        gamma: S,
        beta: S,
        alpha: S,
    },
}

/// Named schedule recipes. The string names are the ones accepted in
/// experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    /// `6 log(T) / (mu T)`, strongly convex objective.
    #[serde(rename = "thm1_const")]
    StronglyConvexConst,
    /// `4 log(sqrt(n) T) / (mu T)`, random reshuffling.
    #[serde(rename = "thm1_rr_var")]
    ReshuffledConst,
    /// `2 log(sqrt(n) T) / (mu T)`, random reshuffling with convex components.
    #[serde(rename = "thm1_rr_cvx")]
    ReshuffledConvexConst,
    /// `6 / (mu (t + beta))`, `beta = max(12 kappa^2 - 1, 1)`.
    #[serde(rename = "thm2_scvx")]
    StronglyConvexDiminishing,
    /// `2 / (mu (t + 1 + 1/n))`.
    #[serde(rename = "thm2_rr_cvx")]
    ReshuffledConvexDiminishing,
    /// `gamma / T^(1/3)`.
    #[serde(rename = "cor2_cuberoot")]
    CubeRootConst,
    /// `gamma n^(1/3) / T^(1/3)`.
    #[serde(rename = "cor2_rr_cuberoot")]
    ReshuffledCubeRootConst,
    /// `sqrt(eps) / (2 L sigma sqrt(3 Theta + 2))`.
    #[serde(rename = "cor1_eps")]
    TargetAccuracyConst,
    /// `gamma / (t + beta)^alpha`, `alpha` in (1/3, 1).
    #[serde(rename = "thm5_poly")]
    PolyDecay,
    /// `gamma / (t + beta)^(1/3)`.
    #[serde(rename = "thm6_third")]
    CubeRootDecay,
    /// `2 / (t + beta)`, gradient-dominated objective.
    #[serde(rename = "thm7_graddom")]
    GradientDominated,
    /// `gamma / (t + beta)^(1/2) <= 1/L`, i.i.d. sampling baseline.
    #[serde(rename = "sgd_appendixD")]
    SgdSqrtDecay,
    /// `gamma n^(1/3) / (t + beta)^(1/3)`, convex components with averaging.
    #[serde(rename = "remark1_cvx")]
    ConvexAveraging,
    #[serde(rename = "custom")]
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 14] = [
        Preset::StronglyConvexConst,
        Preset::ReshuffledConst,
        Preset::ReshuffledConvexConst,
        Preset::StronglyConvexDiminishing,
        Preset::ReshuffledConvexDiminishing,
        Preset::CubeRootConst,
        Preset::ReshuffledCubeRootConst,
        Preset::TargetAccuracyConst,
        Preset::PolyDecay,
        Preset::CubeRootDecay,
        Preset::GradientDominated,
        Preset::SgdSqrtDecay,
        Preset::ConvexAveraging,
        Preset::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::StronglyConvexConst => "thm1_const",
            Preset::ReshuffledConst => "thm1_rr_var",
            Preset::ReshuffledConvexConst => "thm1_rr_cvx",
            Preset::StronglyConvexDiminishing => "thm2_scvx",
            Preset::ReshuffledConvexDiminishing => "thm2_rr_cvx",
            Preset::CubeRootConst => "cor2_cuberoot",
            Preset::ReshuffledCubeRootConst => "cor2_rr_cuberoot",
            Preset::TargetAccuracyConst => "cor1_eps",
            Preset::PolyDecay => "thm5_poly",
            Preset::CubeRootDecay => "thm6_third",
            Preset::GradientDominated => "thm7_graddom",
            Preset::SgdSqrtDecay => "sgd_appendixD",
            Preset::ConvexAveraging => "remark1_cvx",
            Preset::Custom => "custom",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown schedule preset `{s}`")))
    }
}

/// Optional user inputs to a preset. Unset values fall back to the preset's default.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PresetArgs<S> {
    pub gamma: Option<S>,
    pub beta: Option<S>,
    pub alpha: Option<S>,
    pub epsilon: Option<S>,
}

/// Epoch learning-rate schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule<S> {
    pub kind: ScheduleKind<S>,
    pub preset: Preset,
    /// Target accuracy, kept for validation of [`Preset::TargetAccuracyConst`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<S>,
}

impl<S: Scalar> Schedule<S> {
    pub fn constant(eta: S) -> Result<Self> {
        Self::from_kind(ScheduleKind::Constant { eta }, Preset::Custom)
    }

    pub fn poly(gamma: S, beta: S, alpha: S) -> Result<Self> {
        Self::from_kind(ScheduleKind::PolyDecay { gamma, beta, alpha }, Preset::Custom)
    }

    pub fn from_kind(kind: ScheduleKind<S>, preset: Preset) -> Result<Self> {
        match kind {
            ScheduleKind::Constant { eta } if !(eta > S::zero() && eta.is_finite()) => {
                Err(Error::Config(format!("constant rate must be positive, got {eta}")))
            }
            ScheduleKind::PolyDecay { gamma, .. } if !(gamma > S::zero() && gamma.is_finite()) => {
                Err(Error::Config(format!("gamma must be positive, got {gamma}")))
            }
            ScheduleKind::PolyDecay { beta, .. } if !(beta >= S::zero() && beta.is_finite()) => {
                Err(Error::Config(format!("beta must be nonnegative, got {beta}")))
            }
            ScheduleKind::PolyDecay { alpha, .. } if !(alpha > S::zero() && alpha <= S::one()) => {
                Err(Error::Config(format!("alpha must lie in (0, 1], got {alpha}")))
            }
            _ => Ok(Self { kind, preset, epsilon: None }),
        }
    }

    /// Epoch rate `eta_t` for `t >= 1`.
    pub fn eta_at(&self, t: usize) -> S {
        match self.kind {
            ScheduleKind::Constant { eta } => eta,
            ScheduleKind::PolyDecay { gamma, beta, alpha } => gamma / (S::from_usize_lossy(t) + beta).powf(alpha),
        }
    }

    /// `(gamma, beta, alpha)` of a decaying schedule.
    pub fn poly_params(&self) -> Option<(S, S, S)> {
        match self.kind {
            ScheduleKind::PolyDecay { gamma, beta, alpha } => Some((gamma, beta, alpha)),
            ScheduleKind::Constant { .. } => None,
        }
    }
}

fn need<S: Copy>(v: Option<S>, name: &'static str) -> Result<S> {
    v.ok_or(Error::MissingConstant(name))
}

fn lit<S: Scalar>(x: f64) -> S {
    S::lit(x)
}

/// `L sqrt(2 (3 Theta + 2))`, the scale in the generic-shuffling step bounds.
fn generic_scale<S: Scalar>(c: &ProblemConstants<S>) -> S {
    c.l_hat * (lit::<S>(2.0) * (lit::<S>(3.0) * c.theta_hat + lit(2.0))).sqrt()
}

/// `L sqrt(2 (Theta/n + 1))`, the scale in the reshuffling step bounds.
fn reshuffled_scale<S: Scalar>(c: &ProblemConstants<S>, n: usize) -> S {
    c.l_hat * (lit::<S>(2.0) * (c.theta_hat / S::from_usize_lossy(n) + S::one())).sqrt()
}

/// Builds the named schedule for horizon `t_max` and `n` components.
pub fn preset<S: Scalar>(
    name: Preset,
    consts: &ProblemConstants<S>,
    t_max: usize,
    n: usize,
    args: &PresetArgs<S>,
) -> Result<Schedule<S>> {
    if t_max == 0 || n == 0 {
        return Err(Error::Config("T and n must be at least 1".into()));
    }
    let t = S::from_usize_lossy(t_max);
    let nn = S::from_usize_lossy(n);
    let third = S::one() / lit(3.0);
    let one = S::one();
    let beta_or_one = args.beta.unwrap_or(one);
    let kind = match name {
        Preset::StronglyConvexConst => {
            let mu = need(consts.mu, "mu")?;
            ScheduleKind::Constant { eta: lit::<S>(6.0) * t.ln() / (mu * t) }
        }
        Preset::ReshuffledConst => {
            let mu = need(consts.mu, "mu")?;
            ScheduleKind::Constant { eta: lit::<S>(4.0) * (nn.sqrt() * t).ln() / (mu * t) }
        }
        Preset::ReshuffledConvexConst => {
            let mu = need(consts.mu, "mu")?;
            ScheduleKind::Constant { eta: lit::<S>(2.0) * (nn.sqrt() * t).ln() / (mu * t) }
        }
        Preset::StronglyConvexDiminishing => {
            let mu = need(consts.mu, "mu")?;
            let beta = match args.beta {
                Some(b) => b,
                None => {
                    let kappa = need(consts.kappa, "kappa")?;
                    (lit::<S>(12.0) * kappa * kappa - one).max(one)
                }
            };
            ScheduleKind::PolyDecay { gamma: lit::<S>(6.0) / mu, beta, alpha: one }
        }
        Preset::ReshuffledConvexDiminishing => {
            let mu = need(consts.mu, "mu")?;
            ScheduleKind::PolyDecay { gamma: lit::<S>(2.0) / mu, beta: one + one / nn, alpha: one }
        }
        Preset::CubeRootConst => {
            let gamma = need(args.gamma, "gamma")?;
            ScheduleKind::Constant { eta: gamma / t.powf(third) }
        }
        Preset::ReshuffledCubeRootConst => {
            let gamma = need(args.gamma, "gamma")?;
            ScheduleKind::Constant { eta: gamma * (nn / t).powf(third) }
        }
        Preset::TargetAccuracyConst => {
            let eps = need(args.epsilon, "epsilon")?;
            if !(consts.sigma_sq_hat > S::zero()) {
                return Err(Error::MissingConstant("sigma_sq (must be positive)"));
            }
            let denom = lit::<S>(2.0)
                * consts.l_hat
                * consts.sigma_sq_hat.sqrt()
                * (lit::<S>(3.0) * consts.theta_hat + lit(2.0)).sqrt();
            let mut s = Schedule::from_kind(ScheduleKind::Constant { eta: eps.sqrt() / denom }, name)?;
            s.epsilon = Some(eps);
            return Ok(s);
        }
        Preset::PolyDecay => {
            let gamma = need(args.gamma, "gamma")?;
            let alpha = need(args.alpha, "alpha")?;
            if !(alpha > third && alpha < one) {
                return Err(Error::Config(format!("alpha must lie in (1/3, 1), got {alpha}")));
            }
            ScheduleKind::PolyDecay { gamma, beta: beta_or_one, alpha }
        }
        Preset::CubeRootDecay => {
            // Without gamma, take the largest value the validity condition admits.
            let gamma = match args.gamma {
                Some(g) => g,
                None => (beta_or_one + one).powf(third) / generic_scale(consts),
            };
            ScheduleKind::PolyDecay { gamma, beta: beta_or_one, alpha: third }
        }
        Preset::GradientDominated => {
            let beta = args.beta.unwrap_or_else(|| (lit::<S>(2.0) * generic_scale(consts) - one).max(one));
            ScheduleKind::PolyDecay { gamma: lit(2.0), beta, alpha: one }
        }
        Preset::SgdSqrtDecay => {
            let gamma = match args.gamma {
                Some(g) => g,
                None => (beta_or_one + one).sqrt() / consts.l_hat,
            };
            ScheduleKind::PolyDecay { gamma, beta: beta_or_one, alpha: lit(0.5) }
        }
        Preset::ConvexAveraging => {
            let gamma = need(args.gamma, "gamma")?;
            let beta = args.beta.unwrap_or_else(|| {
                let l = consts.l_hat;
                (lit::<S>(8.0) * l * l * l * gamma * gamma * gamma * nn - one).max(one)
            });
            ScheduleKind::PolyDecay { gamma: gamma * nn.powf(third), beta, alpha: third }
        }
        Preset::Custom => match (args.gamma, args.alpha) {
            (Some(gamma), Some(alpha)) => ScheduleKind::PolyDecay { gamma, beta: beta_or_one, alpha },
            (Some(eta), None) => ScheduleKind::Constant { eta },
            _ => return Err(Error::MissingConstant("gamma")),
        },
    };
    Schedule::from_kind(kind, name)
}

/// One numerically evaluated condition `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition<S> {
    pub name: String,
    pub inequality: String,
    pub lhs: S,
    pub rhs: S,
    pub pass: bool,
}

/// Result of [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport<S> {
    pub preset: Preset,
    /// Set when the constants used are fitted estimates.
    pub estimated: bool,
    pub conditions: Vec<Condition<S>>,
}

impl<S: Scalar> ValidityReport<S> {
    pub fn passes(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    fn push(&mut self, name: &str, inequality: &str, lhs: S, rhs: S) {
        let pass = lhs <= rhs + lit::<S>(4.0) * S::epsilon() * rhs.abs();
        self.conditions.push(Condition { name: name.into(), inequality: inequality.into(), lhs, rhs, pass });
    }

    fn missing(&mut self, name: &str, constant: &str) {
        self.conditions.push(Condition {
            name: name.into(),
            inequality: format!("requires {constant}"),
            lhs: S::nan(),
            rhs: S::nan(),
            pass: false,
        });
    }
}

/// Evaluates every condition attached to the schedule's preset.
/// Schedules are non-increasing, so step-size caps are checked at `t = 1`.
pub fn validate<S: Scalar>(s: &Schedule<S>, consts: &ProblemConstants<S>, t_max: usize, n: usize) -> ValidityReport<S> {
    let mut r = ValidityReport { preset: s.preset, estimated: consts.estimated, conditions: Vec::new() };
    let t = S::from_usize_lossy(t_max);
    let nn = S::from_usize_lossy(n);
    let one = S::one();
    let two = lit::<S>(2.0);
    let l = consts.l_hat;
    let eta1 = s.eta_at(1);
    let third = one / lit(3.0);
    let golden = (lit::<S>(5.0).sqrt() - one) / two;
    let (gamma, beta, alpha) = s.poly_params().unwrap_or((eta1, S::zero(), S::zero()));
    match s.preset {
        Preset::StronglyConvexConst => match consts.kappa {
            Some(k) => r.push("horizon", "12 kappa^2 log(T) <= T", lit::<S>(12.0) * k * k * t.ln(), t),
            None => r.missing("horizon", "kappa"),
        },
        Preset::ReshuffledConst => match consts.mu {
            Some(mu) => r.push(
                "horizon",
                "8 L sqrt(Theta/n + 1) log(sqrt(n) T) / mu^2 <= T",
                lit::<S>(8.0) * l * (consts.theta_hat / nn + one).sqrt() * (nn.sqrt() * t).ln() / (mu * mu),
                t,
            ),
            None => r.missing("horizon", "mu"),
        },
        Preset::ReshuffledConvexConst => match consts.kappa {
            Some(k) => {
                r.push(
                    "horizon",
                    "log(sqrt(n) T) <= (T/2) min(1, (sqrt5 - 1)/kappa)",
                    (nn.sqrt() * t).ln(),
                    t / two * one.min(two * golden / k),
                );
            }
            None => r.missing("horizon", "kappa"),
        },
        Preset::StronglyConvexDiminishing => match consts.kappa {
            Some(k) => r.push("beta", "12 kappa^2 - 1 <= beta", lit::<S>(12.0) * k * k - one, beta),
            None => r.missing("beta", "kappa"),
        },
        Preset::ReshuffledConvexDiminishing => {
            r.push("smoothness", "L <= (sqrt5 - 1)/2", l, golden);
        }
        Preset::CubeRootConst => {
            let g = eta1 * t.powf(third);
            r.push("horizon", "gamma L sqrt(2(3 Theta + 2)) <= T^(1/3)", g * generic_scale(consts), t.powf(third));
        }
        Preset::ReshuffledCubeRootConst => {
            let g = eta1 * (t / nn).powf(third);
            r.push(
                "horizon",
                "gamma L n^(1/3) sqrt(2(Theta/n + 1)) <= T^(1/3)",
                g * nn.powf(third) * reshuffled_scale(consts, n),
                t.powf(third),
            );
        }
        Preset::TargetAccuracyConst => {
            match s.epsilon {
                Some(eps) => r.push("accuracy", "epsilon <= 2 sigma^2", eps, two * consts.sigma_sq_hat),
                None => r.missing("accuracy", "epsilon"),
            }
            r.push("step", "eta L sqrt(2(3 Theta + 2)) <= 1", eta1 * generic_scale(consts), one);
        }
        Preset::PolyDecay | Preset::CubeRootDecay => {
            r.push(
                "step",
                "gamma L sqrt(2(3 Theta + 2)) <= (beta + 1)^alpha",
                gamma * generic_scale(consts),
                (beta + one).powf(alpha),
            );
        }
        Preset::GradientDominated => {
            r.push(
                "beta",
                "max(2 L sqrt(2(3 Theta + 2)) - 1, 1) <= beta",
                (two * generic_scale(consts) - one).max(one),
                beta,
            );
            if consts.tau.is_none() {
                r.missing("gradient dominance", "tau");
            }
        }
        Preset::SgdSqrtDecay => r.push("step", "eta_1 <= 1/L", eta1, one / l),
        Preset::ConvexAveraging => {
            r.push("step", "eta_1 <= 1/(2L)", eta1, one / (two * l));
            let g = gamma / nn.powf(third);
            r.push(
                "beta",
                "max(1, 8 L^3 gamma^3 n - 1) <= beta",
                (lit::<S>(8.0) * (l * g).powi(3) * nn - one).max(one),
                beta,
            );
        }
        Preset::Custom => {
            r.push("descent", "eta_1 <= 1/L", eta1, one / l);
            r.push("deviation", "eta_1 <= 1/(L sqrt3)", eta1, one / (l * lit::<S>(3.0).sqrt()));
            r.push("deviation near optimum", "eta_1 <= 1/(2L)", eta1, one / (two * l));
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts(mu: f64, l: f64) -> ProblemConstants<f64> {
        ProblemConstants {
            mu: Some(mu),
            kappa: Some(l / mu),
            tau: Some(0.5 / mu),
            ..ProblemConstants::with_smoothness(l)
        }
    }

    #[test]
    fn eta_values() {
        let s = Schedule::poly(1.0, 0.0, 0.5).unwrap();
        assert_eq!(s.eta_at(4), 0.5);
        let c = Schedule::constant(0.3).unwrap();
        assert_eq!(c.eta_at(1), c.eta_at(1_000_000));
        let args = PresetArgs { beta: Some(11.0), ..Default::default() };
        let s = preset(Preset::StronglyConvexDiminishing, &consts(1.0, 1.0), 10, 1, &args).unwrap();
        assert_eq!(s.eta_at(1), 0.5);
    }

    #[test]
    fn strongly_convex_constant_rate() {
        let c = consts(1.0, 1.0);
        let s = preset(Preset::StronglyConvexConst, &c, 100, 10, &PresetArgs::default()).unwrap();
        assert!((s.eta_at(1) - 0.276_310_211_159_285_5).abs() < 1e-15);
        let r = validate(&s, &c, 100, 10);
        assert!(r.passes());
        assert!((r.conditions[0].lhs - 55.262_042_231_857_1).abs() < 1e-12);
    }

    #[test]
    fn diminishing_preset_parameters() {
        let c = consts(2.0, 2.0);
        let s = preset(Preset::StronglyConvexDiminishing, &c, 10, 1, &PresetArgs::default()).unwrap();
        assert_eq!(s.kind, ScheduleKind::PolyDecay { gamma: 3.0, beta: 11.0, alpha: 1.0 });
        let g = preset(Preset::GradientDominated, &c, 10, 1, &PresetArgs { beta: Some(1.0), ..Default::default() })
            .unwrap();
        assert_eq!(g.eta_at(1), 1.0);
    }

    #[test]
    fn missing_constant_is_named() {
        let c = ProblemConstants::<f64>::with_smoothness(1.0);
        let e = preset(Preset::StronglyConvexDiminishing, &c, 10, 1, &PresetArgs::default()).unwrap_err();
        assert_eq!(e, Error::MissingConstant("mu"));
    }

    #[test]
    fn constructed_violation_and_boundary() {
        // gamma L sqrt(2(3*0+2)) = gamma * 2 = 2 with gamma = 1; (beta+1)^alpha = 1 with beta = 0.
        let c = ProblemConstants::<f64>::with_smoothness(1.0);
        let s = Schedule::from_kind(ScheduleKind::PolyDecay { gamma: 1.0, beta: 0.0, alpha: 0.5 }, Preset::PolyDecay)
            .unwrap();
        let r = validate(&s, &c, 10, 1);
        assert!(!r.passes());
        assert_eq!((r.conditions[0].lhs, r.conditions[0].rhs), (2.0, 1.0));
        let l = 3.7;
        let s = Schedule::constant(1.0 / (2.0 * l)).unwrap();
        let r = validate(&s, &ProblemConstants::with_smoothness(l), 10, 1);
        assert!(r.passes());
        assert_eq!(r.conditions[2].lhs, r.conditions[2].rhs);
    }

    #[test]
    fn preset_names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
            assert_eq!(p.to_string(), p.name());
        }
        assert!("thm9".parse::<Preset>().is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(Schedule::constant(0.0).is_err());
        assert!(Schedule::poly(1.0, -1.0, 0.5).is_err());
        assert!(Schedule::poly(1.0, 0.0, 1.5).is_err());
        let c = ProblemConstants::<f64>::with_smoothness(1.0);
        let args = PresetArgs { gamma: Some(1.0), alpha: Some(0.2), ..Default::default() };
        assert!(preset(Preset::PolyDecay, &c, 10, 1, &args).is_err());
    }
}
