//! Bound curves as CSV for plot overlays.

use std::path::Path;

use serde::Deserialize;
use shufflesgd::analysis::{theorem_bound_curve, BoundCurveParams, BoundDisplay};

use crate::error::{HarnessError, Result};

fn default_horizon() -> usize {
    100
}

#[derive(Deserialize)]
struct Horizon {
    #[serde(default = "default_horizon")]
    horizon: usize,
}

/// Parses a constants file: the fields of [`BoundCurveParams`] plus an optional `horizon`.
pub fn parse_constants(display: BoundDisplay, json: &str) -> Result<(BoundCurveParams<f64>, usize)> {
    let mut value: serde_json::Value = serde_json::from_str(json).map_err(|e| HarnessError::Config(e.to_string()))?;
    let obj = value.as_object_mut().ok_or_else(|| HarnessError::Config("constants must be a JSON object".into()))?;
    obj.insert("display".into(), serde_json::to_value(display)?);
    let Horizon { horizon } = serde_json::from_value(value.clone()).map_err(|e| HarnessError::Config(e.to_string()))?;
    let params = serde_json::from_value(value).map_err(|e| HarnessError::Config(e.to_string()))?;
    if horizon == 0 {
        return Err(HarnessError::Config("horizon must be at least 1".into()));
    }
    Ok((params, horizon))
}

/// CSV with columns `t,bound` followed by one column per term.
pub fn bound_curve_csv(params: &BoundCurveParams<f64>, horizon: usize) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for t in 1..=horizon {
        let b = theorem_bound_curve(params, t)?;
        if t == 1 {
            let mut header = vec!["t".to_owned(), "bound".to_owned()];
            header.extend(b.terms.iter().map(|(k, _)| k.clone()));
            w.write_record(&header)?;
        }
        let mut rec = vec![t.to_string(), b.total.to_string()];
        rec.extend(b.terms.iter().map(|(_, v)| v.to_string()));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

pub fn bounds_command(theorem: &str, constants: &Path, horizon: Option<usize>) -> Result<String> {
    let display: BoundDisplay = theorem.parse()?;
    let text = std::fs::read_to_string(constants).map_err(|e| HarnessError::io(constants, e))?;
    let (params, h) = parse_constants(display, &text)?;
    bound_curve_csv(&params, horizon.unwrap_or(h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonconvex_curve_csv() {
        let (p, h) = parse_constants(
            BoundDisplay::NonconvexConst,
            r#"{"gap0": 1.0, "eta": 0.1, "l": 1.0, "sigma_sq": 1.0, "horizon": 3}"#,
        )
        .unwrap();
        assert_eq!(h, 3);
        let csv = bound_curve_csv(&p, h).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,bound,initial,noise");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("1,40.06"));
    }

    #[test]
    fn missing_constant_is_config_error() {
        let (p, _) = parse_constants(BoundDisplay::ScvxConst, "{}").unwrap();
        let err = bound_curve_csv(&p, 2).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
