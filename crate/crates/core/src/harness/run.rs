//! Experiment execution: protocol folds, hyperparameter sweeps, and
//! best-of-sweep result assembly.
//!
//! Cross-validation partitions the ratings of one dataset into balanced
//! folds (seeded shuffle, each rating tested exactly once); holdout
//! evaluates the two datasets the recipe produced. Per sweep point the
//! fold RMSEs are averaged; the best point per algorithm is the lowest
//! average, ties resolving to the smaller parameter. The per-pair squared
//! errors of each best point are retained, in fold order, so two runs over
//! the identical test sequence can be compared with a paired t-test.

use std::borrow::Cow;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algorithms::{
    ii_sweep, mf_predict, mf_train, uu_sweep, AlgorithmKind, Prediction,
};
use crate::dataset::{Dataset, DatasetBuilder, DatasetStats, Rating};
use crate::error::{Error, Result};
use crate::evaluation::{coverage, evaluate};
use crate::harness::recipe::{data_dir_from_env, materialize};
use crate::harness::spec::{ExperimentSpec, Protocol};

// RNG stream tags keeping the harness draws disjoint from each other.
const FOLD_STREAM: u64 = 0x666f;
const SAMPLE_STREAM_BASE: u64 = 0x7361_0000;

/// Protocol as recorded in a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProtocolInfo {
    CrossValidation { folds: usize },
    Holdout,
}

/// Present when the evaluated pairs are a seeded subsample of the test set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsampleInfo {
    pub kept: usize,
    pub total: usize,
}

/// Summary of one sweep point. `rmse` is the fold average; the served
/// fractions are pooled over every evaluated pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub algorithm: AlgorithmKind,
    pub parameter: usize,
    pub rmse: f64,
    pub pairs: usize,
    pub served_user_fraction: f64,
    pub served_pair_fraction: f64,
}

/// Winning sweep point of one algorithm, with its per-pair detail retained
/// for significance comparisons (test-sequence order, folds concatenated).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestPoint {
    pub algorithm: AlgorithmKind,
    pub parameter: usize,
    pub rmse: f64,
    pub per_pair_sq_errors: Vec<f64>,
    pub served: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    pub seed: u64,
    pub protocol: ProtocolInfo,
    /// Holdout: the train dataset. Cross-validation: the full dataset.
    pub train_stats: DatasetStats,
    /// Holdout only: the test dataset, before any subsampling.
    pub test_stats: Option<DatasetStats>,
    /// `min_ratings` of the recipe's filter steps, in order.
    pub min_ratings_filters: Vec<usize>,
    pub subsample: Option<SubsampleInfo>,
    /// Digest of the evaluated (user, item, value) sequence; comparisons
    /// require it to match exactly.
    pub test_fingerprint: String,
    pub points: Vec<SweepPoint>,
    pub best: Vec<BestPoint>,
}

impl ExperimentResult {
    pub fn best_for(&self, kind: AlgorithmKind) -> Option<&BestPoint> {
        self.best.iter().find(|b| b.algorithm == kind)
    }

    /// Canonical serialized form; byte-identical across re-runs of the
    /// same spec and seed.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("result serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<ExperimentResult> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Run the experiment with the data directory taken from the environment.
pub fn run(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    run_with_data_dir(spec, data_dir_from_env().as_deref())
}

struct PointAgg {
    algorithm: AlgorithmKind,
    parameter: usize,
    fold_rmses: Vec<f64>,
    sq_errors: Vec<f64>,
    served: Vec<bool>,
}

/// Rebuild `ds` restricted to the given ascending record indices.
fn subset(ds: &Dataset, keep: &[usize]) -> Dataset {
    let mut b = DatasetBuilder::new();
    for meta in ds.item_metas() {
        b.add_item_meta(meta.clone());
    }
    for &idx in keep {
        let r = &ds.records()[idx];
        b.push(Rating {
            user: ds.user_ref(r.user).clone(),
            item: ds.item_ref(r.item).clone(),
            value: r.value,
            source: r.source,
        })
        .expect("subset of a deduplicated dataset");
    }
    b.build()
}

/// Fold assignment per rating: a seeded shuffle cut into balanced chunks.
fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(FOLD_STREAM);
    order.shuffle(&mut rng);

    let mut assignment = vec![0usize; n];
    let base = n / folds;
    let extra = n % folds;
    let mut cursor = 0;
    for fold in 0..folds {
        let size = base + usize::from(fold < extra);
        for &idx in &order[cursor..cursor + size] {
            assignment[idx] = fold;
        }
        cursor += size;
    }
    assignment
}

/// Choose `keep` of `n` indices without replacement, ascending.
fn sample_indices(n: usize, keep: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..keep {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(keep);
    pool.sort_unstable();
    pool
}

pub fn run_with_data_dir(
    spec: &ExperimentSpec,
    data_dir: Option<&Path>,
) -> Result<ExperimentResult> {
    spec.validate()?;
    let datasets = materialize(spec, data_dir)?;

    let (protocol_info, fold_count, train_stats, test_stats) = match &spec.evaluation.protocol {
        Protocol::CrossValidation { dataset, folds } => {
            let ds = &datasets[dataset];
            if ds.rating_count() < *folds {
                return Err(Error::EmptyAfterStep {
                    step: "cross_validation".to_string(),
                    what: format!(
                        "test (needs at least {folds} ratings, '{dataset}' has {})",
                        ds.rating_count()
                    ),
                });
            }
            (
                ProtocolInfo::CrossValidation { folds: *folds },
                *folds,
                ds.stats(),
                None,
            )
        }
        Protocol::Holdout { train, test } => (
            ProtocolInfo::Holdout,
            1,
            datasets[train].stats(),
            Some(datasets[test].stats()),
        ),
    };

    let assignment = match &spec.evaluation.protocol {
        Protocol::CrossValidation { dataset, folds } => Some(fold_assignment(
            datasets[dataset].rating_count(),
            *folds,
            spec.seed,
        )),
        Protocol::Holdout { .. } => None,
    };

    // Sweep-point slots in report order: canonical algorithm order, then
    // ascending parameter.
    let algorithms = spec.algorithm_order();
    let mut aggs: Vec<PointAgg> = Vec::new();
    for &kind in &algorithms {
        for parameter in spec.sweep_values(kind) {
            aggs.push(PointAgg {
                algorithm: kind,
                parameter,
                fold_rmses: Vec::new(),
                sq_errors: Vec::new(),
                served: Vec::new(),
            });
        }
    }

    let mut hasher = Sha256::new();
    let mut test_users: Vec<String> = Vec::new();
    let mut kept_pairs = 0usize;
    let mut total_pairs = 0usize;

    for fold in 0..fold_count {
        // Materialize this fold's train/test pair.
        let (train, test_full): (Cow<Dataset>, Cow<Dataset>) =
            match &spec.evaluation.protocol {
                Protocol::CrossValidation { dataset, .. } => {
                    let ds = &datasets[dataset];
                    let assignment = assignment.as_ref().expect("assignment built for cv");
                    let test_idx: Vec<usize> =
                        (0..ds.rating_count()).filter(|&i| assignment[i] == fold).collect();
                    let train_idx: Vec<usize> =
                        (0..ds.rating_count()).filter(|&i| assignment[i] != fold).collect();
                    (
                        Cow::Owned(subset(ds, &train_idx)),
                        Cow::Owned(subset(ds, &test_idx)),
                    )
                }
                Protocol::Holdout { train, test } => (
                    Cow::Borrowed(&datasets[train]),
                    Cow::Borrowed(&datasets[test]),
                ),
            };

        total_pairs += test_full.rating_count();
        let test: Cow<Dataset> = match spec.evaluation.max_test_pairs {
            Some(limit) => {
                let quota = limit.div_ceil(fold_count).max(1);
                if quota < test_full.rating_count() {
                    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                    rng.set_stream(SAMPLE_STREAM_BASE + fold as u64);
                    let keep = sample_indices(test_full.rating_count(), quota, &mut rng);
                    Cow::Owned(subset(&test_full, &keep))
                } else {
                    test_full
                }
            }
            None => test_full,
        };
        kept_pairs += test.rating_count();

        for r in test.records() {
            let user = test.user_ref(r.user).as_str();
            let item = test.item_ref(r.item).as_str();
            hasher.update(user.as_bytes());
            hasher.update([0x1f]);
            hasher.update(item.as_bytes());
            hasher.update([0x1f]);
            hasher.update(format!("{}", r.value).as_bytes());
            hasher.update([0x1e]);
            test_users.push(user.to_string());
        }

        let mut slot = 0usize;
        for &kind in &algorithms {
            let values = spec.sweep_values(kind);
            match kind {
                AlgorithmKind::Uu | AlgorithmKind::Ii => {
                    let cfg = spec.predictor_config(kind, values[0]);
                    type SweepFn = fn(
                        &Dataset,
                        &Dataset,
                        &[usize],
                        &crate::algorithms::PredictorConfig,
                    )
                        -> Result<Vec<Vec<Prediction>>>;
                    let sweep_fn: SweepFn = match kind {
                        AlgorithmKind::Uu => uu_sweep,
                        _ => ii_sweep,
                    };
                    let per_k = sweep_fn(&train, &test, &values, &cfg)?;
                    for preds in &per_k {
                        let report = evaluate(&test, preds)?;
                        let agg = &mut aggs[slot];
                        agg.fold_rmses.push(report.rmse);
                        agg.sq_errors.extend_from_slice(&report.per_pair_sq_errors);
                        agg.served.extend_from_slice(&report.served);
                        slot += 1;
                    }
                }
                AlgorithmKind::Mf => {
                    for &f in &values {
                        let cfg = spec.predictor_config(AlgorithmKind::Mf, f);
                        let model = mf_train(&train, &cfg)?;
                        let preds: Vec<Prediction> = test
                            .records()
                            .iter()
                            .map(|r| {
                                mf_predict(
                                    &model,
                                    test.user_ref(r.user),
                                    test.item_ref(r.item),
                                    &cfg,
                                )
                            })
                            .collect();
                        let report = evaluate(&test, &preds)?;
                        let agg = &mut aggs[slot];
                        agg.fold_rmses.push(report.rmse);
                        agg.sq_errors.extend_from_slice(&report.per_pair_sq_errors);
                        agg.served.extend_from_slice(&report.served);
                        slot += 1;
                    }
                }
            }
        }
        debug_assert_eq!(slot, aggs.len());
    }

    let subsample = if kept_pairs < total_pairs {
        Some(SubsampleInfo {
            kept: kept_pairs,
            total: total_pairs,
        })
    } else {
        None
    };
    let test_fingerprint = format!("{:x}", hasher.finalize());

    let points: Vec<SweepPoint> = aggs
        .iter()
        .map(|agg| {
            let rmse =
                agg.fold_rmses.iter().sum::<f64>() / agg.fold_rmses.len() as f64;
            let (served_user_fraction, served_pair_fraction) = coverage(
                test_users
                    .iter()
                    .map(String::as_str)
                    .zip(agg.served.iter().copied()),
            );
            SweepPoint {
                algorithm: agg.algorithm,
                parameter: agg.parameter,
                rmse,
                pairs: agg.sq_errors.len(),
                served_user_fraction,
                served_pair_fraction,
            }
        })
        .collect();

    let mut best: Vec<BestPoint> = Vec::new();
    for &kind in &algorithms {
        let mut winner: Option<usize> = None;
        for (idx, point) in points.iter().enumerate() {
            if point.algorithm != kind {
                continue;
            }
            if winner.is_none_or(|w| point.rmse < points[w].rmse) {
                winner = Some(idx);
            }
        }
        let idx = winner.expect("every swept algorithm has points");
        let agg = &mut aggs[idx];
        best.push(BestPoint {
            algorithm: kind,
            parameter: points[idx].parameter,
            rmse: points[idx].rmse,
            per_pair_sq_errors: std::mem::take(&mut agg.sq_errors),
            served: std::mem::take(&mut agg.served),
        });
    }

    Ok(ExperimentResult {
        name: spec.name.clone(),
        seed: spec.seed,
        protocol: protocol_info,
        train_stats,
        test_stats,
        min_ratings_filters: spec.min_ratings_filters(),
        subsample,
        test_fingerprint,
        points,
        best,
    })
}
