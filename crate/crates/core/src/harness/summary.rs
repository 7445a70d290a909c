use std::collections::BTreeMap;

use super::run::ExperimentTrace;
use crate::error::{Error, Result};

/// Across-seed statistics of one (algorithm, episode) evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: String,
    pub episode: usize,
    pub n_seeds: usize,
    pub mean_rmspbe: f64,
    /// Sample standard deviation (n − 1 denominator) over `√n`; 0 for one seed.
    pub std_error: f64,
    pub mean_nnz: f64,
}

/// Rows ordered by (algorithm, episode).
pub fn summarize(trace: &ExperimentTrace) -> Result<Vec<SummaryRow>> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut groups: BTreeMap<(&str, usize), (Vec<f64>, usize)> = BTreeMap::new();
    for r in &trace.records {
        let entry = groups.entry((&r.algorithm, r.episode)).or_default();
        entry.0.push(r.rmspbe);
        entry.1 += r.nnz;
    }
    Ok(groups
        .into_iter()
        .map(|((algorithm, episode), (values, nnz_total))| {
            let (mean, std_error) = mean_and_std_error(&values);
            SummaryRow {
                algorithm: algorithm.to_string(),
                episode,
                n_seeds: values.len(),
                mean_rmspbe: mean,
                std_error,
                mean_nnz: nnz_total as f64 / values.len() as f64,
            }
        })
        .collect())
}

/// Summary row at the last evaluation point of `algorithm`.
pub fn final_row<'a>(rows: &'a [SummaryRow], algorithm: &str) -> Option<&'a SummaryRow> {
    rows.iter()
        .filter(|r| r.algorithm == algorithm)
        .max_by_key(|r| r.episode)
}

/// `(mean, standard error of the mean)`.
pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Standard error of a difference of two independent means.
pub fn pooled_std_error(a: &SummaryRow, b: &SummaryRow) -> f64 {
    a.std_error.hypot(b.std_error)
}
