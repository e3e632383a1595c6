//! Significance comparison between two experiment results: a paired
//! t-test over per-pair squared errors at the respective best sweep
//! points, refused outright unless both runs evaluated the identical test
//! pair sequence.

use serde::{Deserialize, Serialize};

use crate::algorithms::AlgorithmKind;
use crate::error::{Error, Result};
use crate::harness::run::ExperimentResult;
use crate::stats::{paired_t_test, TTestOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub algorithm: AlgorithmKind,
    pub left_parameter: usize,
    pub right_parameter: usize,
    pub left_rmse: f64,
    pub right_rmse: f64,
    /// Paired t-test over squared errors; `mean_diff` inside is left minus
    /// right, so a negative value favors the left result.
    pub outcome: TTestOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub left: String,
    pub right: String,
    pub pairs: usize,
    pub rows: Vec<ComparisonRow>,
}

/// Compare two results algorithm by algorithm. Algorithms present on only
/// one side are skipped; no shared algorithm is an error.
pub fn compare(a: &ExperimentResult, b: &ExperimentResult) -> Result<ComparisonReport> {
    if a.test_fingerprint != b.test_fingerprint {
        let describe = |r: &ExperimentResult| {
            format!(
                "{} (seed {}, fingerprint {})",
                r.name,
                r.seed,
                &r.test_fingerprint[..12.min(r.test_fingerprint.len())]
            )
        };
        return Err(Error::TestSetMismatch {
            left: describe(a),
            right: describe(b),
        });
    }

    let mut rows = Vec::new();
    for left in &a.best {
        let Some(right) = b.best_for(left.algorithm) else {
            continue;
        };
        let outcome = paired_t_test(&left.per_pair_sq_errors, &right.per_pair_sq_errors)?;
        rows.push(ComparisonRow {
            algorithm: left.algorithm,
            left_parameter: left.parameter,
            right_parameter: right.parameter,
            left_rmse: left.rmse,
            right_rmse: right.rmse,
            outcome,
        });
    }
    if rows.is_empty() {
        return Err(Error::Config(
            "results share no swept algorithm to compare".to_string(),
        ));
    }
    Ok(ComparisonReport {
        left: a.name.clone(),
        right: b.name.clone(),
        pairs: a.best[0].per_pair_sq_errors.len(),
        rows,
    })
}
