//! RMSE and coverage reporting over evaluated test sets.
//!
//! Fallback predictions count toward RMSE (every test pair needs a value)
//! but not toward coverage; the per-pair squared errors and served flags are
//! retained so significance tests and served-only RMSE can be derived later
//! without re-running the predictor.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::algorithms::Prediction;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Root mean squared error between aligned prediction and truth vectors.
pub fn rmse(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: truths.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput("rmse over zero pairs".to_string()));
    }
    let sum: f64 = predictions
        .iter()
        .zip(truths)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok((sum / predictions.len() as f64).sqrt())
}

/// Served-coverage fractions from (user attribution, served) pairs:
/// the fraction of distinct users with at least one served pair, and the
/// fraction of served pairs. Both are 0 for an empty input.
pub fn coverage<U: Eq + std::hash::Hash>(
    pairs: impl IntoIterator<Item = (U, bool)>,
) -> (f64, f64) {
    let mut user_served: HashMap<U, bool> = HashMap::new();
    let mut total_pairs = 0usize;
    let mut served_pairs = 0usize;
    for (user, served) in pairs {
        total_pairs += 1;
        if served {
            served_pairs += 1;
        }
        let any = user_served.entry(user).or_insert(false);
        *any = *any || served;
    }
    if total_pairs == 0 {
        return (0.0, 0.0);
    }
    let served_users = user_served.values().filter(|&&s| s).count();
    (
        served_users as f64 / user_served.len() as f64,
        served_pairs as f64 / total_pairs as f64,
    )
}

/// Summary of one evaluated (predictor, test set) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rmse: f64,
    /// Test pair count.
    pub n: usize,
    pub served_user_fraction: f64,
    pub served_pair_fraction: f64,
    /// Squared error per test pair, in `test.records()` order.
    pub per_pair_sq_errors: Vec<f64>,
    /// Served flag per test pair, aligned with `per_pair_sq_errors`.
    pub served: Vec<bool>,
}

impl EvalReport {
    /// RMSE over only the pairs the model served, `None` when it served
    /// nothing.
    pub fn served_only_rmse(&self) -> Option<f64> {
        let (sum, count) = self
            .per_pair_sq_errors
            .iter()
            .zip(&self.served)
            .filter(|&(_, &s)| s)
            .fold((0.0, 0usize), |(sum, count), (&e, _)| (sum + e, count + 1));
        (count > 0).then(|| (sum / count as f64).sqrt())
    }
}

/// Score a prediction vector against the test set it was produced from.
/// `predictions` must align with `test.records()`.
pub fn evaluate(test: &Dataset, predictions: &[Prediction]) -> Result<EvalReport> {
    if predictions.len() != test.rating_count() {
        return Err(Error::LengthMismatch {
            left: test.rating_count(),
            right: predictions.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput("evaluation over zero pairs".to_string()));
    }
    let mut sum = 0.0;
    let mut per_pair = Vec::with_capacity(predictions.len());
    let mut served = Vec::with_capacity(predictions.len());
    let mut served_pairs = 0usize;
    let mut served_users: HashSet<u32> = HashSet::new();
    for (r, p) in test.records().iter().zip(predictions) {
        let e = (p.value - r.value) * (p.value - r.value);
        sum += e;
        per_pair.push(e);
        served.push(p.served);
        if p.served {
            served_pairs += 1;
            served_users.insert(r.user);
        }
    }
    Ok(EvalReport {
        rmse: (sum / predictions.len() as f64).sqrt(),
        n: predictions.len(),
        served_user_fraction: served_users.len() as f64 / test.user_count() as f64,
        served_pair_fraction: served_pairs as f64 / predictions.len() as f64,
        per_pair_sq_errors: per_pair,
        served,
    })
}
