//! Per-run and aggregate CSV rows.
//!
//! Columns follow struct field order; optional values are empty cells.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One row per (run, epoch).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub run_id: String,
    pub strategy: String,
    pub alpha: f64,
    pub gamma_over_n: f64,
    pub seed: u64,
    pub epoch: usize,
    pub eta_t: f64,
    pub train_loss: f64,
    pub grad_norm_sq: f64,
    pub test_accuracy: Option<f64>,
    pub dist_sq: Option<f64>,
    pub wall_ms: f64,
    /// Epoch at which the run produced a non-finite value.
    pub diverged_at: Option<usize>,
}

/// Mean and sample standard deviation over the runs of a (strategy, alpha, gamma/n, epoch) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub strategy: String,
    pub alpha: f64,
    pub gamma_over_n: f64,
    pub epoch: usize,
    pub runs: usize,
    pub train_loss_mean: f64,
    pub train_loss_std: f64,
    pub grad_norm_sq_mean: f64,
    pub grad_norm_sq_std: f64,
    pub test_accuracy_mean: Option<f64>,
    pub test_accuracy_std: Option<f64>,
    pub dist_sq_mean: Option<f64>,
    pub dist_sq_std: Option<f64>,
}

pub fn write_rows<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_rows<T: for<'de> Deserialize<'de>, R: Read>(input: R) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn rows_to_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    write_rows(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// `(mean, sample std)`; the std of a single value is 0.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

fn optional_stats(xs: &[Option<f64>]) -> (Option<f64>, Option<f64>) {
    let vals: Option<Vec<f64>> = xs.iter().copied().collect();
    match vals {
        Some(v) if !v.is_empty() => {
            let (m, s) = mean_std(&v);
            (Some(m), Some(s))
        }
        _ => (None, None),
    }
}

/// Groups rows by (strategy, alpha, gamma/n, epoch) in order of first appearance.
pub fn aggregate(rows: &[ResultRow]) -> Vec<AggregateRow> {
    type Key = (String, u64, u64, usize);
    let mut order: Vec<Key> = Vec::new();
    let mut groups: std::collections::HashMap<Key, Vec<&ResultRow>> = std::collections::HashMap::new();
    for r in rows {
        let key = (r.strategy.clone(), r.alpha.to_bits(), r.gamma_over_n.to_bits(), r.epoch);
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let g = &groups[&key];
            let (train_loss_mean, train_loss_std) = mean_std(&g.iter().map(|r| r.train_loss).collect::<Vec<_>>());
            let (grad_norm_sq_mean, grad_norm_sq_std) = mean_std(&g.iter().map(|r| r.grad_norm_sq).collect::<Vec<_>>());
            let (test_accuracy_mean, test_accuracy_std) =
                optional_stats(&g.iter().map(|r| r.test_accuracy).collect::<Vec<_>>());
            let (dist_sq_mean, dist_sq_std) = optional_stats(&g.iter().map(|r| r.dist_sq).collect::<Vec<_>>());
            AggregateRow {
                strategy: key.0,
                alpha: f64::from_bits(key.1),
                gamma_over_n: f64::from_bits(key.2),
                epoch: key.3,
                runs: g.len(),
                train_loss_mean,
                train_loss_std,
                grad_norm_sq_mean,
                grad_norm_sq_std,
                test_accuracy_mean,
                test_accuracy_std,
                dist_sq_mean,
                dist_sq_std,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_follows_field_order() {
        let row = ResultRow {
            run_id: "rr-a0.5-g0.01-s1".into(),
            strategy: "rr".into(),
            alpha: 0.5,
            gamma_over_n: 0.01,
            seed: 1,
            epoch: 1,
            eta_t: 0.1,
            train_loss: std::f64::consts::LN_2,
            grad_norm_sq: 1e-300,
            test_accuracy: None,
            dist_sq: Some(2.5),
            wall_ms: 0.25,
            diverged_at: None,
        };
        let text = rows_to_string(&[row]).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "run_id,strategy,alpha,gamma_over_n,seed,epoch,eta_t,train_loss,grad_norm_sq,test_accuracy,dist_sq,wall_ms,diverged_at"
        );
        assert_eq!(lines.next().unwrap(), "rr-a0.5-g0.01-s1,rr,0.5,0.01,1,1,0.1,0.6931471805599453,1e-300,,2.5,0.25,");
        assert!(!text.contains('\r'));
    }

    #[test]
    fn single_run_has_zero_std() {
        assert_eq!(mean_std(&[3.0]), (3.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
