//! Materializes a [`ProblemSpec`] into an objective with optional test data.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use flate2::read::GzDecoder;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shufflesgd::data::{minmax_scale, parse_libsvm_reader, train_test_split};
use shufflesgd::problems::accuracy;
use shufflesgd::{Dataset, FiniteSumProblem, Logistic, Quadratic, RandomQuadratic, SparseRow};

use crate::config::ProblemSpec;
use crate::error::{HarnessError, Result};

/// A loaded objective. Logistic problems carry their held-out rows.
pub enum LoadedProblem {
    Logistic { problem: Logistic, test: Dataset },
    Quadratic(Quadratic),
}

impl LoadedProblem {
    pub fn objective(&self) -> &dyn FiniteSumProblem<f64> {
        match self {
            Self::Logistic { problem, .. } => problem,
            Self::Quadratic(q) => q,
        }
    }

    pub fn test_accuracy(&self, w: &[f64]) -> Option<f64> {
        match self {
            Self::Logistic { test, .. } => Some(accuracy(test, w)),
            Self::Quadratic(_) => None,
        }
    }

    pub fn test_rows(&self) -> Option<usize> {
        match self {
            Self::Logistic { test, .. } => Some(test.n()),
            Self::Quadratic(_) => None,
        }
    }

    /// Global `(Theta, sigma^2)` valid at every point.
    pub fn variance_constants(&self) -> (f64, f64) {
        match self {
            Self::Logistic { problem, .. } => problem.variance_constants(),
            Self::Quadratic(q) => q.variance_constants(),
        }
    }
}

/// Reads a LIBSVM file, decompressing `.gz` files.
pub fn read_libsvm(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let reader: Box<dyn Read> =
        if path.extension().is_some_and(|e| e == "gz") { Box::new(GzDecoder::new(file)) } else { Box::new(file) };
    Ok(parse_libsvm_reader(BufReader::new(reader))?)
}

/// Sparse binary features with labels `sign(x^T w_true)`, each flipped with probability `label_noise`.
/// Every row has at least one active feature.
pub fn synthetic_logistic(n: usize, d: usize, density: f64, label_noise: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 || !(density > 0.0 && density <= 1.0) || !(0.0..=0.5).contains(&label_noise) {
        return Err(HarnessError::Config("invalid synthetic logistic spec".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w_true: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut idx: Vec<usize> = (0..d).filter(|_| rng.gen_bool(density)).collect();
        if idx.is_empty() {
            idx.push(rng.gen_range(0..d));
        }
        let margin: f64 = idx.iter().map(|&j| w_true[j]).sum();
        let mut y = if margin > 0.0 { 1.0 } else { -1.0 };
        if rng.gen_bool(label_noise) {
            y = -y;
        }
        let values = vec![1.0; idx.len()];
        rows.push(SparseRow::new(idx, values)?);
        labels.push(y);
    }
    Ok(Dataset::new(rows, labels, d)?)
}

pub fn load_problem(spec: &ProblemSpec) -> Result<LoadedProblem> {
    match spec {
        ProblemSpec::Libsvm { path, test_path, lambda, max_rows, subsample_seed, test_fraction, split_seed, scale } => {
            let full = read_libsvm(path)?;
            let (train, test) = match test_path {
                Some(tp) => {
                    let test = read_libsvm(tp)?;
                    let d = full.d().max(test.d());
                    let train = full.with_dim(d)?;
                    let train = match max_rows {
                        Some(m) => train.subsample(*m, *subsample_seed)?,
                        None => train,
                    };
                    (train, test.with_dim(d)?)
                }
                None => {
                    let sub = match max_rows {
                        Some(m) => full.subsample(*m, *subsample_seed)?,
                        None => full,
                    };
                    train_test_split(&sub, *test_fraction, *split_seed)?
                }
            };
            logistic(train, test, *lambda, *scale)
        }
        ProblemSpec::SyntheticLogistic { n, d, density, label_noise, seed, lambda, test_fraction } => {
            let ds = synthetic_logistic(*n, *d, *density, *label_noise, *seed)?;
            let (train, test) = train_test_split(&ds, *test_fraction, seed.wrapping_add(1))?;
            logistic(train, test, *lambda, false)
        }
        ProblemSpec::Quadratic { n, d, curvature, spread, seed } => {
            let spec = RandomQuadratic { n: *n, d: *d, curvature: *curvature, spread: *spread };
            Ok(LoadedProblem::Quadratic(Quadratic::random(&spec, *seed)?))
        }
    }
}

fn logistic(train: Dataset, test: Dataset, lambda: f64, scale: bool) -> Result<LoadedProblem> {
    let (train, test) = if scale {
        let (train, params) = minmax_scale(&train, None)?;
        let (test, _) = minmax_scale(&test, Some(&params))?;
        (train, test)
    } else {
        (train, test)
    };
    Ok(LoadedProblem::Logistic { problem: Logistic::new(&train, lambda)?, test })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_rows_are_nonempty_and_seeded() {
        let a = synthetic_logistic(200, 30, 0.05, 0.1, 4).unwrap();
        assert!(a.rows().iter().all(|r| r.nnz() >= 1));
        assert_eq!(a, synthetic_logistic(200, 30, 0.05, 0.1, 4).unwrap());
        assert!(a.labels().iter().all(|&y| y == 1.0 || y == -1.0));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_libsvm(Path::new("/nonexistent/w8a")).err().unwrap();
        assert!(matches!(err, HarnessError::Io { .. }));
    }
}
