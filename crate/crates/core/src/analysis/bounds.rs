use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::averaged::tail_integral;

/// Closed-form convergence bounds available for overlays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundDisplay {
    /// `E[F - F*]`, strongly convex, `eta_t = 6/(mu(t + beta))`.
    ScvxDiminishing,
    /// `E[F - F*]`, strongly convex, constant rate over horizon `T`.
    ScvxConst,
    /// `E[F - F*]`, reshuffling with convex components, `eta_t = 2/(mu(t + 1 + 1/n))`.
    ScvxRrDiminishing,
    /// `E[F - F*]`, reshuffling, constant rate.
    ScvxRrConst,
    /// `E[F - F*]`, reshuffling with convex components, constant rate.
    ScvxRrConvexConst,
    /// Average squared gradient norm, constant `eta`.
    NonconvexConst,
    NonconvexConstRr,
    /// Average squared gradient norm, `eta = gamma / T^(1/3)`.
    NonconvexCuberoot,
    NonconvexCuberootRr,
    /// Average squared gradient norm, `eta_t = gamma/(t + beta)^alpha`.
    NonconvexPoly,
    /// Average squared gradient norm, `eta_t = gamma/(t + beta)^(1/3)`.
    NonconvexThird,
    /// `E[F - F*]` under gradient dominance, `eta_t = 2/(t + beta)`.
    Graddom,
    GraddomRr,
    /// `E[F(w_hat) - F*]` for the weighted average, constant rate.
    ConvexAvgConst,
    ConvexAvgDiminishing,
    /// i.i.d. SGD average squared gradient norm, `eta_t = gamma/(t + beta)^alpha`, `alpha` in (1/2, 1).
    SgdPoly,
    /// i.i.d. SGD, `eta_t = gamma/(t + beta)^(1/2)`.
    SgdSqrt,
}

impl BoundDisplay {
    pub const ALL: [BoundDisplay; 17] = [
        Self::ScvxDiminishing,
        Self::ScvxConst,
        Self::ScvxRrDiminishing,
        Self::ScvxRrConst,
        Self::ScvxRrConvexConst,
        Self::NonconvexConst,
        Self::NonconvexConstRr,
        Self::NonconvexCuberoot,
        Self::NonconvexCuberootRr,
        Self::NonconvexPoly,
        Self::NonconvexThird,
        Self::Graddom,
        Self::GraddomRr,
        Self::ConvexAvgConst,
        Self::ConvexAvgDiminishing,
        Self::SgdPoly,
        Self::SgdSqrt,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Self::ScvxDiminishing => "scvx-diminishing",
            Self::ScvxConst => "scvx-const",
            Self::ScvxRrDiminishing => "scvx-rr-diminishing",
            Self::ScvxRrConst => "scvx-rr-const",
            Self::ScvxRrConvexConst => "scvx-rr-convex-const",
            Self::NonconvexConst => "nonconvex-const",
            Self::NonconvexConstRr => "nonconvex-const-rr",
            Self::NonconvexCuberoot => "nonconvex-cuberoot",
            Self::NonconvexCuberootRr => "nonconvex-cuberoot-rr",
            Self::NonconvexPoly => "nonconvex-poly",
            Self::NonconvexThird => "nonconvex-third",
            Self::Graddom => "graddom",
            Self::GraddomRr => "graddom-rr",
            Self::ConvexAvgConst => "convex-avg-const",
            Self::ConvexAvgDiminishing => "convex-avg-diminishing",
            Self::SgdPoly => "sgd-poly",
            Self::SgdSqrt => "sgd-sqrt",
        }
    }
}

impl fmt::Display for BoundDisplay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for BoundDisplay {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|d| d.id() == s).ok_or_else(|| Error::Config(format!("unknown bound `{s}`")))
    }
}

/// Inputs of a bound curve. Only the constants the chosen display uses must be set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurveParams<S> {
    pub display: BoundDisplay,
    /// `F(w_0) - F*`.
    #[serde(default)]
    pub gap0: Option<S>,
    /// `|w_0 - w*|^2`.
    #[serde(default)]
    pub dist0_sq: Option<S>,
    #[serde(default)]
    pub l: Option<S>,
    #[serde(default)]
    pub mu: Option<S>,
    #[serde(default)]
    pub theta: Option<S>,
    #[serde(default)]
    pub sigma_sq: Option<S>,
    #[serde(default)]
    pub sigma_star_sq: Option<S>,
    #[serde(default)]
    pub tau: Option<S>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub gamma: Option<S>,
    #[serde(default)]
    pub beta: Option<S>,
    #[serde(default)]
    pub alpha: Option<S>,
    #[serde(default)]
    pub eta: Option<S>,
    /// Use the reshuffling noise constant `L^2 sigma^2 / n` instead of `3 L^2 sigma^2 / 2`.
    #[serde(default)]
    pub reshuffled: bool,
}

impl<S: Scalar> BoundCurveParams<S> {
    pub fn new(display: BoundDisplay) -> Self {
        Self {
            display,
            gap0: None,
            dist0_sq: None,
            l: None,
            mu: None,
            theta: None,
            sigma_sq: None,
            sigma_star_sq: None,
            tau: None,
            n: None,
            gamma: None,
            beta: None,
            alpha: None,
            eta: None,
            reshuffled: false,
        }
    }
}

/// Bound value split into named terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTerms<S> {
    pub terms: Vec<(String, S)>,
    pub total: S,
}

impl<S: Scalar> BoundTerms<S> {
    fn from_terms(terms: Vec<(&str, S)>) -> Self {
        let total = terms.iter().map(|(_, v)| *v).sum();
        Self { terms: terms.into_iter().map(|(k, v)| (k.to_owned(), v)).collect(), total }
    }
}

fn get<S: Copy>(v: Option<S>, name: &'static str) -> Result<S> {
    v.ok_or(Error::MissingConstant(name))
}

/// Evaluates the selected bound at epoch (or horizon) `t >= 1`.
pub fn theorem_bound_curve<S: Scalar>(p: &BoundCurveParams<S>, t: usize) -> Result<BoundTerms<S>> {
    if t == 0 {
        return Err(Error::Argument("t must be at least 1".into()));
    }
    let c = S::lit;
    let one = S::one();
    let tt = S::from_usize_lossy(t);
    let third = one / c(3.0);
    let nn = || get(p.n, "n").map(S::from_usize_lossy);
    let gap = || get(p.gap0, "gap0");
    let dist = || get(p.dist0_sq, "dist0_sq");
    let l = || get(p.l, "l");
    let mu = || get(p.mu, "mu");
    let s2 = || get(p.sigma_sq, "sigma_sq");
    let ss2 = || get(p.sigma_star_sq, "sigma_star_sq");
    let gamma = || get(p.gamma, "gamma");
    let beta = || get(p.beta, "beta");
    let noise_d = || -> Result<S> {
        let (l, s2) = (l()?, s2()?);
        Ok(if p.reshuffled { l * l * s2 / nn()? } else { c(1.5) * l * l * s2 })
    };
    let terms = match p.display {
        BoundDisplay::ScvxDiminishing => {
            let (b, l, mu) = (beta()?, l()?, mu()?);
            let den = (tt + b) * (tt + b - one);
            vec![
                ("initial", b * (b - one) / den * gap()?),
                ("noise", c(216.0) * (l * l + mu * mu) * ss2()? * (tt + b).ln() / (mu.powi(3) * den)),
            ]
        }
        BoundDisplay::ScvxConst => {
            let (l, mu) = (l()?, mu()?);
            vec![
                ("initial", gap()? / (tt * tt)),
                ("noise", c(54.0) * (mu * mu + l * l) * ss2()? * tt.ln().powi(2) / (mu.powi(3) * tt * tt)),
            ]
        }
        BoundDisplay::ScvxRrDiminishing => {
            let (n, l, mu, b) = (nn()?, l()?, mu()?, beta()?);
            let pre = c(2.0) * l / (n * (tt + one / n) * (tt + one / n + one));
            vec![("initial", pre * dist()?), ("noise", pre * l * ss2()? * (tt + b).ln() / (c(3.0) * mu.powi(3)))]
        }
        BoundDisplay::ScvxRrConst => {
            let (n, l, mu) = (nn()?, l()?, mu()?);
            let lg = (n.sqrt() * tt).ln();
            vec![
                ("initial", gap()? / (n * tt * tt)),
                ("noise", c(2.0) * l * l * s2()? * lg * lg / (mu.powi(3) * n * tt * tt)),
            ]
        }
        BoundDisplay::ScvxRrConvexConst => {
            let (n, l, mu) = (nn()?, l()?, mu()?);
            let lg = (n.sqrt() * tt).ln();
            let pre = l / (c(2.0) * n * tt * tt);
            vec![("initial", pre * dist()?), ("noise", pre * c(8.0) * l * ss2()? * lg * lg / (c(3.0) * mu.powi(3)))]
        }
        BoundDisplay::NonconvexConst | BoundDisplay::NonconvexConstRr => {
            let (eta, l) = (get(p.eta, "eta")?, l()?);
            let noise = if p.display == BoundDisplay::NonconvexConst {
                c(6.0) * l * l * s2()? * eta * eta
            } else {
                c(4.0) * l * l * s2()? * eta * eta / nn()?
            };
            vec![("initial", c(4.0) * gap()? / (tt * eta)), ("noise", noise)]
        }
        BoundDisplay::NonconvexCuberoot => {
            let (g, l) = (gamma()?, l()?);
            let scale = tt.powf(-c(2.0) / c(3.0));
            vec![("initial", scale * c(4.0) * gap()? / g), ("noise", scale * c(6.0) * l * l * s2()? * g * g)]
        }
        BoundDisplay::NonconvexCuberootRr => {
            let (g, l, n) = (gamma()?, l()?, nn()?);
            let scale = c(4.0) / (n.powf(third) * tt.powf(c(2.0) / c(3.0)));
            vec![("initial", scale * gap()? / g), ("noise", scale * l * l * s2()? * g * g)]
        }
        BoundDisplay::NonconvexPoly => {
            let (g, b, a) = (gamma()?, beta()?, get(p.alpha, "alpha")?);
            let d = noise_d()?;
            let cc = gap()? + d * g.powi(3) / ((c(3.0) * a - one) * b.powf(c(3.0) * a - one));
            vec![
                ("initial", c(4.0) * (one + b).powf(a) * gap()? / (g * tt)),
                ("growth", c(2.0) * cc / (a * g) * (tt - one + b).powf(a) / tt),
                ("noise", c(4.0) * d * g * g * tail_integral(tt, b, c(2.0) * a) / tt),
            ]
        }
        BoundDisplay::NonconvexThird => {
            let (g, b) = (gamma()?, beta()?);
            let d = noise_d()?;
            let cc = gap()? + d * g.powi(3) / (one + b);
            let grow = (tt - one + b).powf(third);
            vec![
                ("initial", c(4.0) * (one + b).powf(third) * gap()? / (g * tt)),
                ("growth", c(6.0) * cc / g * grow / tt),
                ("log", c(6.0) * d * g * g * grow * (tt + one + b).ln() / tt),
                ("noise", c(12.0) * d * g * g * (tt + b).powf(third) / tt),
            ]
        }
        BoundDisplay::Graddom => {
            let (b, l, tau) = (beta()?, l()?, get(p.tau, "tau")?);
            let den = (tt + b - one) * (tt + b);
            vec![
                ("initial", b * (b - one) * gap()? / den),
                ("noise", c(768.0) * tau.powi(3) * l * l * s2()? * (tt + b).ln() / den),
            ]
        }
        BoundDisplay::GraddomRr => {
            let (n, l, tau) = (nn()?, l()?, get(p.tau, "tau")?);
            let b = p.beta.unwrap_or(one + one / n);
            let pre = c(2.0) / (n * (tt + one / n) * (tt + one + one / n));
            vec![("initial", pre * gap()?), ("noise", pre * c(265.0) * tau.powi(3) * l * l * s2()? * (tt + b).ln())]
        }
        BoundDisplay::ConvexAvgConst | BoundDisplay::ConvexAvgDiminishing => {
            let (g, l, n) = (gamma()?, l()?, nn()?);
            let pre = one / (n.powf(third) * tt.powf(c(2.0) / c(3.0)));
            let log = if p.display == BoundDisplay::ConvexAvgDiminishing { (tt + beta()?).ln() } else { one };
            vec![("initial", pre * dist()? / (c(2.0) * g)), ("noise", pre * g * g * l * ss2()? * log / c(3.0))]
        }
        BoundDisplay::SgdPoly => {
            let (g, b, a, l, s2) = (gamma()?, beta()?, get(p.alpha, "alpha")?, l()?, s2()?);
            let cc = gap()? + l * s2 * g * g / (c(2.0) * (c(2.0) * a - one) * b.powf(c(2.0) * a - one));
            vec![
                ("initial", c(2.0) * (one + b).powf(a) * gap()? / (g * tt)),
                ("growth", cc / (a * g) * (tt - one + b).powf(a) / tt),
                ("noise", l * s2 * g / (one - a) * (tt + b).powf(one - a) / tt),
            ]
        }
        BoundDisplay::SgdSqrt => {
            let (g, b, l, s2) = (gamma()?, beta()?, l()?, s2()?);
            let cc = gap()? + l * s2 * g * g / (c(2.0) * (one + b));
            let grow = (tt - one + b).sqrt();
            vec![
                ("initial", c(2.0) * (one + b).sqrt() * gap()? / (g * tt)),
                ("growth", c(2.0) * cc / g * grow / tt),
                ("log", l * g * s2 * grow * (tt + one + b).ln() / tt),
                ("noise", c(2.0) * l * g * s2 * (tt + b).sqrt() / tt),
            ]
        }
    };
    Ok(BoundTerms::from_terms(terms))
}
