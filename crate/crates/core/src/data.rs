//! LIBSVM-format classification data: parsing, min-max scaling, splitting.

use std::fmt::Write as _;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse feature vector with strictly increasing 0-based indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRow {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseRow {
    pub fn new(indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::Argument("indices and values differ in length".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Argument("row indices must be strictly increasing".into()));
        }
        Ok(Self { indices, values })
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn to_dense(&self, d: usize) -> Vec<f64> {
        let mut out = vec![0.0; d];
        for (j, v) in self.iter() {
            out[j] = v;
        }
        out
    }
}

/// Binary classification data set with labels in {-1, +1}.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<SparseRow>,
    labels: Vec<f64>,
    d: usize,
}

impl Dataset {
    /// Builds a data set, checking labels and index bounds.
    pub fn new(rows: Vec<SparseRow>, labels: Vec<f64>, d: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty);
        }
        if rows.len() != labels.len() {
            return Err(Error::Argument(format!("{} rows but {} labels", rows.len(), labels.len())));
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::Argument(format!("label {bad} is not +1 or -1")));
        }
        for row in &rows {
            if row.indices.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Argument("row indices must be strictly increasing".into()));
            }
            if row.indices.last().is_some_and(|&j| j >= d) {
                return Err(Error::Argument(format!("feature index exceeds dimension {d}")));
            }
        }
        Ok(Self { rows, labels, d })
    }

    /// Dense constructor, dropping exact zeros.
    pub fn from_dense(features: &[Vec<f64>], labels: Vec<f64>) -> Result<Self> {
        let d = features.first().map_or(0, Vec::len);
        let rows = features
            .iter()
            .map(|x| {
                if x.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: x.len() });
                }
                let (indices, values) = x.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(j, &v)| (j, v)).unzip();
                Ok(SparseRow { indices, values })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows, labels, d)
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &SparseRow {
        &self.rows[i]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    /// Same rows viewed in a larger feature space (e.g. a test file with fewer observed columns).
    pub fn with_dim(mut self, d: usize) -> Result<Self> {
        if d < self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: d });
        }
        self.d = d;
        Ok(self)
    }

    /// Rows at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let rows = indices.iter().map(|&i| self.rows[i].clone()).collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Self::new(rows, labels, self.d)
    }

    /// Seeded subsample of at most `max_rows` rows, kept in original order.
    pub fn subsample(&self, max_rows: usize, seed: u64) -> Result<Self> {
        if max_rows == 0 {
            return Err(Error::Argument("subsample size must be positive".into()));
        }
        if self.n() <= max_rows {
            return Ok(self.clone());
        }
        let mut idx: Vec<usize> = (0..self.n()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        idx.truncate(max_rows);
        idx.sort_unstable();
        self.select(&idx)
    }
}

/// Parses LIBSVM text (`<label> <idx>:<val> ...`, 1-based indices).
pub fn parse_libsvm(text: &str) -> Result<Dataset> {
    parse_libsvm_reader(text.as_bytes())
}

/// Streaming variant of [`parse_libsvm`].
pub fn parse_libsvm_reader<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut d = 0usize;
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| Error::Parse { line: lineno, msg: e.to_string() })?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label: f64 =
            label_tok.parse().map_err(|_| Error::Parse { line: lineno, msg: format!("bad label `{label_tok}`") })?;
        let mut row = SparseRow::default();
        for tok in tokens {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| Error::Parse { line: lineno, msg: format!("expected idx:val, got `{tok}`") })?;
            let idx: usize = i.parse().map_err(|_| Error::Parse { line: lineno, msg: format!("bad index `{i}`") })?;
            if idx == 0 {
                return Err(Error::Parse { line: lineno, msg: "indices are 1-based".into() });
            }
            let val: f64 = v.parse().map_err(|_| Error::Parse { line: lineno, msg: format!("bad value `{v}`") })?;
            if row.indices.last().is_some_and(|&last| idx - 1 <= last) {
                return Err(Error::Format { line: lineno });
            }
            d = d.max(idx);
            row.indices.push(idx - 1);
            row.values.push(val);
        }
        rows.push(row);
        labels.push(if label > 0.0 { 1.0 } else { -1.0 });
    }
    if rows.is_empty() {
        return Err(Error::Empty);
    }
    Dataset::new(rows, labels, d)
}

/// Serializes to LIBSVM text; `parse_libsvm` recovers an identical data set
/// provided the highest feature index appears in some row.
pub fn to_libsvm(ds: &Dataset) -> String {
    let mut out = String::new();
    for (row, &y) in ds.rows.iter().zip(&ds.labels) {
        out.push_str(if y > 0.0 { "+1" } else { "-1" });
        for (j, v) in row.iter() {
            let _ = write!(out, " {}:{}", j + 1, v);
        }
        out.push('\n');
    }
    out
}

/// Per-feature range of the split the scaling was fitted on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScalingParams {
    /// Fits column ranges, counting implicit zeros of sparse rows.
    pub fn fit(ds: &Dataset) -> Self {
        let mut min = vec![f64::INFINITY; ds.d];
        let mut max = vec![f64::NEG_INFINITY; ds.d];
        let mut count = vec![0usize; ds.d];
        for row in &ds.rows {
            for (j, v) in row.iter() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
                count[j] += 1;
            }
        }
        for j in 0..ds.d {
            if count[j] < ds.n() {
                min[j] = min[j].min(0.0);
                max[j] = max[j].max(0.0);
            }
        }
        Self { min, max }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    fn apply(&self, j: usize, v: f64) -> f64 {
        let range = self.max[j] - self.min[j];
        if range > 0.0 {
            (v - self.min[j]) / range
        } else {
            0.0
        }
    }
}

/// Maps every feature to `(v - min_j) / (max_j - min_j)`; constant columns map to 0.
/// Fits the parameters on `ds` unless `params` is given.
pub fn minmax_scale(ds: &Dataset, params: Option<&ScalingParams>) -> Result<(Dataset, ScalingParams)> {
    let params = match params {
        Some(p) if p.dim() < ds.d => {
            return Err(Error::DimensionMismatch { expected: p.dim(), got: ds.d });
        }
        Some(p) => p.clone(),
        None => ScalingParams::fit(ds),
    };
    let d = params.dim();
    // Columns whose implicit zeros move under the affine map.
    let shifted: Vec<usize> = (0..d).filter(|&j| params.apply(j, 0.0) != 0.0).collect();
    let rows = ds
        .rows
        .iter()
        .map(|row| {
            let mut dense: Vec<(usize, f64)> = shifted.iter().map(|&j| (j, params.apply(j, 0.0))).collect();
            for (j, v) in row.iter() {
                match dense.binary_search_by_key(&j, |&(k, _)| k) {
                    Ok(pos) => dense[pos].1 = params.apply(j, v),
                    Err(pos) => dense.insert(pos, (j, params.apply(j, v))),
                }
            }
            let (indices, values) = dense.into_iter().filter(|&(_, v)| v != 0.0).unzip();
            SparseRow { indices, values }
        })
        .collect();
    Ok((Dataset::new(rows, ds.labels.clone(), d)?, params))
}

/// Seeded random partition; the test part has `floor(test_fraction * n)` rows.
/// Both parts keep the original row order.
pub fn train_test_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Argument(format!("test fraction {test_fraction} not in (0, 1)")));
    }
    let n = ds.n();
    if n < 2 {
        return Err(Error::Argument("need at least 2 samples to split".into()));
    }
    let n_test = (test_fraction * n as f64).floor() as usize;
    if n_test == 0 {
        return Err(Error::Argument("test split would be empty".into()));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (test, train) = idx.split_at_mut(n_test);
    test.sort_unstable();
    train.sort_unstable();
    Ok((ds.select(train)?, ds.select(test)?))
}

/// Index sets used by [`train_test_split`], exposed for partition checks.
pub fn split_indices(n: usize, test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let n_test = (test_fraction * n as f64).floor() as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut test = idx[..n_test].to_vec();
    let mut train = idx[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    (train, test)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_basic_example() {
        let ds = parse_libsvm("+1 1:0.5 3:1.0\n-1 2:0.25").unwrap();
        assert_eq!((ds.n(), ds.d()), (2, 3));
        assert_eq!(ds.labels(), &[1.0, -1.0]);
        assert_eq!(ds.row(0).indices, vec![0, 2]);
        assert_eq!(ds, parse_libsvm("+1 1:0.5 3:1.0\r\n-1 2:0.25\n\n").unwrap());
    }

    #[test]
    fn maps_zero_one_labels() {
        let ds = parse_libsvm("0 1:1\n1 1:2\n-3 1:1").unwrap();
        assert_eq!(ds.labels(), &[-1.0, 1.0, -1.0]);
    }

    #[test]
    fn reports_errors_with_line_numbers() {
        assert_eq!(parse_libsvm("+1 2:1 2:3"), Err(Error::Format { line: 1 }));
        assert_eq!(parse_libsvm("+1 3:1\n-1 3:1 1:2"), Err(Error::Format { line: 2 }));
        assert!(matches!(parse_libsvm("+1 1:1\nfoo 1:1"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_libsvm("+1 1-1"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_libsvm("+1 0:1"), Err(Error::Parse { line: 1, .. })));
        assert_eq!(parse_libsvm(""), Err(Error::Empty));
        assert_eq!(parse_libsvm("\n  \n"), Err(Error::Empty));
    }

    #[test]
    fn scales_column_to_unit_interval() {
        let ds = Dataset::from_dense(&[vec![2.0, 5.0], vec![4.0, 5.0], vec![6.0, 5.0]], vec![1.0, -1.0, 1.0]).unwrap();
        let (scaled, params) = minmax_scale(&ds, None).unwrap();
        let col0: Vec<f64> = (0..3).map(|i| scaled.row(i).to_dense(2)[0]).collect();
        let col1: Vec<f64> = (0..3).map(|i| scaled.row(i).to_dense(2)[1]).collect();
        assert_eq!(col0, vec![0.0, 0.5, 1.0]);
        assert_eq!(col1, vec![0.0, 0.0, 0.0]);
        let (again, _) = minmax_scale(&ds, Some(&params)).unwrap();
        assert_eq!(again, scaled);
    }

    #[test]
    fn negative_minimum_densifies_implicit_zeros() {
        let ds = parse_libsvm("+1 1:-1\n-1 2:3").unwrap();
        let (scaled, _) = minmax_scale(&ds, None).unwrap();
        assert_eq!(scaled.row(0).to_dense(2), vec![0.0, 0.0]);
        assert_eq!(scaled.row(1).to_dense(2), vec![1.0, 1.0]);
    }

    #[test]
    fn split_sizes_follow_floor_rule() {
        let ds = Dataset::from_dense(&vec![vec![1.0]; 10], vec![1.0; 10]).unwrap();
        let (tr, te) = train_test_split(&ds, 0.2, 7).unwrap();
        assert_eq!((tr.n(), te.n()), (8, 2));
        let ds3 = Dataset::from_dense(&vec![vec![1.0]; 3], vec![1.0; 3]).unwrap();
        let (tr, te) = train_test_split(&ds3, 0.5, 1).unwrap();
        assert_eq!((tr.n(), te.n()), (2, 1));
        assert!(train_test_split(&ds, 1.0, 0).is_err());
        assert!(train_test_split(&ds, 0.0, 0).is_err());
        assert_eq!(split_indices(10, 0.2, 7), split_indices(10, 0.2, 7));
    }
}
