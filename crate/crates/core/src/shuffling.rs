//! Per-epoch permutation policies and the sampling-without-replacement oracle.

use itertools::Itertools;
use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dist_sq, Scalar};

/// A bijection on `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    order: Vec<usize>,
}

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &i in &order {
            if i >= order.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Config(format!("{order:?} is not a permutation of 0..{}", order.len())));
            }
        }
        Ok(Self { order })
    }

    pub fn identity(n: usize) -> Self {
        Self { order: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.order
    }

    /// 64-bit FNV-1a hash of the order.
    pub fn digest(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        self.order
            .iter()
            .flat_map(|&i| (i as u64).to_le_bytes())
            .fold(OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(PRIME))
    }
}

/// How each epoch's processing order is chosen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShuffleKind {
    /// Fresh uniform permutation every epoch.
    #[serde(alias = "rr")]
    RandomReshuffle,
    /// One uniform permutation, reused every epoch.
    #[serde(alias = "so")]
    ShuffleOnce,
    /// Identity order every epoch.
    #[serde(alias = "ig")]
    IncrementalGradient,
    Fixed(Vec<usize>),
}

impl ShuffleKind {
    /// Short label used in result files.
    pub fn label(&self) -> &'static str {
        match self {
            Self::RandomReshuffle => "rr",
            Self::ShuffleOnce => "so",
            Self::IncrementalGradient => "ig",
            Self::Fixed(_) => "fixed",
        }
    }

    /// Whether the produced orders depend on the seed.
    pub fn is_random(&self) -> bool {
        matches!(self, Self::RandomReshuffle | Self::ShuffleOnce)
    }
}

/// Permutation generator owned by a single run.
///
/// Random orders come from ChaCha8 seeded with the run seed; epoch `t` of
/// random reshuffling reads stream `t`, so epochs are independent and any
/// epoch can be regenerated without replaying earlier ones.
#[derive(Debug, Clone)]
pub struct ShuffleStrategy {
    kind: ShuffleKind,
    rng_seed: u64,
    cached_once: Option<Permutation>,
}

impl ShuffleStrategy {
    pub fn new(kind: ShuffleKind, rng_seed: u64) -> Result<Self> {
        if let ShuffleKind::Fixed(order) = &kind {
            Permutation::new(order.clone())?;
        }
        Ok(Self { kind, rng_seed, cached_once: None })
    }

    pub fn kind(&self) -> &ShuffleKind {
        &self.kind
    }

    pub fn cached(&self) -> Option<&Permutation> {
        self.cached_once.as_ref()
    }

    fn draw(&self, stream: u64, n: usize) -> Permutation {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(stream);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        Permutation { order }
    }

    /// Order for epoch `epoch >= 1` over `n` components.
    pub fn next_permutation(&mut self, epoch: usize, n: usize) -> Result<Permutation> {
        if n == 0 {
            return Err(Error::Argument("n must be at least 1".into()));
        }
        if epoch == 0 {
            return Err(Error::Argument("epochs are numbered from 1".into()));
        }
        match &self.kind {
            ShuffleKind::RandomReshuffle => Ok(self.draw(epoch as u64, n)),
            ShuffleKind::ShuffleOnce => {
                if self.cached_once.as_ref().map(Permutation::len) != Some(n) {
                    self.cached_once = Some(self.draw(0, n));
                }
                Ok(self.cached_once.clone().expect("cached above"))
            }
            ShuffleKind::IncrementalGradient => Ok(Permutation::identity(n)),
            ShuffleKind::Fixed(order) if order.len() == n => Ok(Permutation { order: order.clone() }),
            ShuffleKind::Fixed(order) => {
                Err(Error::Config(format!("fixed order has length {} but n = {n}", order.len())))
            }
        }
    }
}

/// Statistics of the average of a uniformly random `k`-subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetStats<S> {
    /// Mean of the subset averages.
    pub mean: Vec<S>,
    /// `E |avg_subset - avg_all|^2`.
    pub variance: S,
    /// Number of subsets enumerated or sampled.
    pub samples: usize,
    pub exhaustive: bool,
}

/// Subset counts up to this size are enumerated exhaustively.
pub const EXHAUSTIVE_LIMIT: u128 = 1_000_000;
const MC_SAMPLES: usize = 200_000;
const MC_SEED: u64 = 0x5eed;

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
        if c > EXHAUSTIVE_LIMIT * 1_000 {
            return u128::MAX;
        }
    }
    c
}

fn population_mean<S: Scalar>(values: &[Vec<S>]) -> Result<Vec<S>> {
    let n = values.len();
    let d = values.first().ok_or(Error::Empty)?.len();
    if let Some(v) = values.iter().find(|v| v.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: v.len() });
    }
    let nn = S::from_usize_lossy(n);
    Ok((0..d).map(|j| values.iter().map(|v| v[j]).sum::<S>() / nn).collect())
}

/// Population variance `(1/n) sum |x_i - mean|^2`.
pub fn population_variance<S: Scalar>(values: &[Vec<S>]) -> Result<S> {
    let mean = population_mean(values)?;
    Ok(values.iter().map(|v| dist_sq(v, &mean)).sum::<S>() / S::from_usize_lossy(values.len()))
}

/// [`subset_average_stats_with`] using the default Monte-Carlo budget.
pub fn subset_average_stats<S: Scalar>(values: &[Vec<S>], k: usize) -> Result<SubsetStats<S>> {
    subset_average_stats_with(values, k, MC_SAMPLES, MC_SEED)
}

/// Enumerates all `k`-subsets when there are at most [`EXHAUSTIVE_LIMIT`],
/// otherwise samples `mc_samples` subsets.
pub fn subset_average_stats_with<S: Scalar>(
    values: &[Vec<S>],
    k: usize,
    mc_samples: usize,
    seed: u64,
) -> Result<SubsetStats<S>> {
    let n = values.len();
    let center = population_mean(values)?;
    if k == 0 || k > n {
        return Err(Error::Argument(format!("subset size {k} not in 1..={n}")));
    }
    let d = center.len();
    let kk = S::from_usize_lossy(k);
    let mut sum_avg = vec![S::zero(); d];
    let mut sum_dev = S::zero();
    let mut avg = vec![S::zero(); d];
    let mut accumulate = |subset: &mut dyn Iterator<Item = usize>| {
        avg.iter_mut().for_each(|a| *a = S::zero());
        for i in subset {
            for (a, &x) in avg.iter_mut().zip(&values[i]) {
                *a = *a + x;
            }
        }
        avg.iter_mut().for_each(|a| *a = *a / kk);
        for (s, &a) in sum_avg.iter_mut().zip(avg.iter()) {
            *s = *s + a;
        }
        sum_dev = sum_dev + dist_sq(&avg, &center);
    };
    let exhaustive = binomial(n, k) <= EXHAUSTIVE_LIMIT;
    let samples = if exhaustive {
        let mut count = 0;
        for subset in (0..n).combinations(k) {
            accumulate(&mut subset.into_iter());
            count += 1;
        }
        count
    } else {
        if mc_samples == 0 {
            return Err(Error::Argument("Monte-Carlo sample count must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..mc_samples {
            accumulate(&mut index::sample(&mut rng, n, k).into_iter());
        }
        mc_samples
    };
    let m = S::from_usize_lossy(samples);
    Ok(SubsetStats { mean: sum_avg.into_iter().map(|s| s / m).collect(), variance: sum_dev / m, samples, exhaustive })
}

/// Comparison of the subset-average spread with `(n-k)/(k(n-1)) * sigma^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport<S> {
    pub lhs: S,
    pub rhs: S,
    pub abs_gap: S,
    pub exhaustive: bool,
}

pub fn verify_rr_identity<S: Scalar>(values: &[Vec<S>], k: usize) -> Result<IdentityReport<S>> {
    let n = values.len();
    if n < 2 {
        return Err(Error::Argument("the variance identity needs n >= 2".into()));
    }
    let stats = subset_average_stats(values, k)?;
    let sigma_sq = population_variance(values)?;
    let (nn, kk) = (S::from_usize_lossy(n), S::from_usize_lossy(k));
    let rhs = (nn - kk) / (kk * (nn - S::one())) * sigma_sq;
    Ok(IdentityReport { lhs: stats.variance, rhs, abs_gap: (stats.variance - rhs).abs(), exhaustive: stats.exhaustive })
}
