//! KNN predictors. Single-pair functions implement the contract directly;
//! the `*_sweep` evaluators batch whole test sets and share one similarity
//! pass across all neighborhood sizes.
//!
//! The batched paths reuse the exact kernel arithmetic of the lazy paths
//! (same accumulation order, same comparator), so their outputs are
//! bit-identical to per-pair prediction. The equivalence tests assert that
//! with `==`, not a tolerance.

use rayon::prelude::*;

use crate::algorithms::fallback::fallback_prediction;
use crate::algorithms::{apply_clamp, AlgorithmKind, Prediction, PredictorConfig};
use crate::dataset::{Dataset, ItemRef, UserRef};
use crate::error::{Error, Result};
use crate::similarity::{
    cosine_from_sums, pearson_from_sums, sum_squares, top_k_neighbors, CoratedSums,
    SimilarityView,
};

/// User-user prediction: mean-centered weighted sum over the top-k raters of
/// the item. Falls back when the user or item is unknown, no neighbor has a
/// defined similarity, or the weight mass is zero.
pub fn uu_predict(
    train: &Dataset,
    u: &UserRef,
    i: &ItemRef,
    cfg: &PredictorConfig,
) -> Result<Prediction> {
    debug_assert_eq!(cfg.kind, AlgorithmKind::Uu);
    let user = train.user_index(u);
    let item = train.item_index(i);
    let (Some(user), Some(item)) = (user, item) else {
        return fallback_prediction(train, user, item, cfg);
    };
    let view = SimilarityView::user_pearson(train, cfg.similarity);
    let candidates: Vec<u32> = train
        .ratings_by_item(item)
        .iter()
        .map(|&(v, _)| v)
        .collect();
    let neighbors = top_k_neighbors(&view, user, cfg.neighborhood_size, &candidates);
    let mut num = 0.0;
    let mut den = 0.0;
    for &(v, s) in &neighbors {
        let r_vi = train.value_of(v, item).expect("candidate rated the item");
        num += s * (r_vi - train.user_mean(v));
        den += s.abs();
    }
    if neighbors.is_empty() || den <= 0.0 {
        return fallback_prediction(train, Some(user), Some(item), cfg);
    }
    Ok(Prediction {
        value: apply_clamp(train.user_mean(user) + num / den, cfg.clamp),
        served: true,
        fallback_level: None,
    })
}

/// Item-item prediction: similarity-weighted sum over the top-k items the
/// user rated. Fallback conditions mirror [`uu_predict`].
pub fn ii_predict(
    train: &Dataset,
    u: &UserRef,
    i: &ItemRef,
    cfg: &PredictorConfig,
) -> Result<Prediction> {
    debug_assert_eq!(cfg.kind, AlgorithmKind::Ii);
    let user = train.user_index(u);
    let item = train.item_index(i);
    let (Some(user), Some(item)) = (user, item) else {
        return fallback_prediction(train, user, item, cfg);
    };
    let view = SimilarityView::item_cosine(train, cfg.similarity);
    let candidates: Vec<u32> = train
        .ratings_by_user(user)
        .iter()
        .map(|&(j, _)| j)
        .collect();
    let neighbors = top_k_neighbors(&view, item, cfg.neighborhood_size, &candidates);
    let mut num = 0.0;
    let mut den = 0.0;
    for &(j, s) in &neighbors {
        let r_uj = train.value_of(user, j).expect("user rated the candidate");
        num += s * r_uj;
        den += s.abs();
    }
    if neighbors.is_empty() || den <= 0.0 {
        return fallback_prediction(train, Some(user), Some(item), cfg);
    }
    Ok(Prediction {
        value: apply_clamp(num / den, cfg.clamp),
        served: true,
        fallback_level: None,
    })
}

/// Per-neighbor overlap accumulators with epoch stamping, so one buffer
/// serves many anchor entities without a full clear in between.
struct AccBuffers {
    stamp: Vec<u32>,
    epoch: u32,
    sums: Vec<CoratedSums>,
}

impl AccBuffers {
    fn new(n: usize) -> Self {
        AccBuffers {
            stamp: vec![0; n],
            epoch: 0,
            sums: vec![CoratedSums::default(); n],
        }
    }

    fn begin(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
    }

    #[inline]
    fn acc(&mut self, idx: u32, x: f64, y: f64) {
        let i = idx as usize;
        if self.stamp[i] != self.epoch {
            self.stamp[i] = self.epoch;
            self.sums[i] = CoratedSums::default();
        }
        let s = &mut self.sums[i];
        s.n += 1;
        s.sx += x;
        s.sy += y;
        s.sxy += x * y;
        s.sx2 += x * x;
        s.sy2 += y * y;
    }

    #[inline]
    fn get(&self, idx: u32) -> Option<&CoratedSums> {
        (self.stamp[idx as usize] == self.epoch).then(|| &self.sums[idx as usize])
    }
}

fn check_sweep(train: &Dataset, ks: &[usize]) -> Result<()> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::Config(
            "neighborhood sweep must be non-empty with k >= 1".to_string(),
        ));
    }
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    Ok(())
}

/// Ascending traversal order of the sweep, as (output slot) indices.
fn ascending_slots(ks: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ks.len()).collect();
    order.sort_by_key(|&s| ks[s]);
    order
}

/// Walk sorted candidates once, emitting one prediction per sweep size.
/// `cands` must already be in neighborhood order (similarity descending,
/// identifier ascending); `term` maps a candidate to its weighted-sum
/// contribution, and `finish` turns num/den into the prediction value.
fn prefix_predictions(
    cands: &[(u32, f64, f64)],
    ks: &[usize],
    k_order: &[usize],
    cfg: &PredictorConfig,
    term: impl Fn(u32, f64, f64) -> f64,
    finish: impl Fn(f64, f64) -> f64,
    mut fallback: impl FnMut() -> Prediction,
) -> Vec<Prediction> {
    let mut preds = vec![
        Prediction {
            value: f64::NAN,
            served: false,
            fallback_level: None,
        };
        ks.len()
    ];
    let mut num = 0.0;
    let mut den = 0.0;
    let mut taken = 0usize;
    for &slot in k_order {
        let want = ks[slot].min(cands.len());
        while taken < want {
            let (idx, s, r) = cands[taken];
            num += term(idx, s, r);
            den += s.abs();
            taken += 1;
        }
        preds[slot] = if taken == 0 || den <= 0.0 {
            fallback()
        } else {
            Prediction {
                value: apply_clamp(finish(num, den), cfg.clamp),
                served: true,
                fallback_level: None,
            }
        };
    }
    preds
}

/// Evaluate UU over every test pair for every k in `ks`, reusing one
/// similarity pass per test user. Output: per sweep slot (in `ks` order), a
/// prediction per test record (in `test.records()` order).
pub fn uu_sweep(
    train: &Dataset,
    test: &Dataset,
    ks: &[usize],
    cfg: &PredictorConfig,
) -> Result<Vec<Vec<Prediction>>> {
    debug_assert_eq!(cfg.kind, AlgorithmKind::Uu);
    check_sweep(train, ks)?;

    let user_map: Vec<Option<u32>> = test.users().iter().map(|u| train.user_index(u)).collect();
    let item_map: Vec<Option<u32>> = test.items().iter().map(|i| train.item_index(i)).collect();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); test.user_count()];
    for (pos, r) in test.records().iter().enumerate() {
        groups[r.user as usize].push(pos);
    }
    let k_order = ascending_slots(ks);

    let per_group: Vec<Vec<(usize, Vec<Prediction>)>> = groups
        .par_iter()
        .enumerate()
        .map_init(
            || AccBuffers::new(train.user_count()),
            |buf, (tu, positions)| {
                let mut out = Vec::with_capacity(positions.len());
                let Some(u) = user_map[tu] else {
                    for &pos in positions {
                        let item = item_map[test.records()[pos].item as usize];
                        let p = fallback_prediction(train, None, item, cfg)
                            .expect("train checked non-empty");
                        out.push((pos, vec![p; ks.len()]));
                    }
                    return out;
                };

                buf.begin();
                for &(j, x) in train.ratings_by_user(u) {
                    for &(v, y) in train.ratings_by_item(j) {
                        if v != u {
                            buf.acc(v, x, y);
                        }
                    }
                }

                let u_mean = train.user_mean(u);
                for &pos in positions {
                    let Some(i) = item_map[test.records()[pos].item as usize] else {
                        let p = fallback_prediction(train, Some(u), None, cfg)
                            .expect("train checked non-empty");
                        out.push((pos, vec![p; ks.len()]));
                        continue;
                    };
                    let mut cands: Vec<(u32, f64, f64)> = Vec::new();
                    for &(v, r_vi) in train.ratings_by_item(i) {
                        if v == u {
                            continue;
                        }
                        let sim = buf
                            .get(v)
                            .and_then(|s| pearson_from_sums(s, cfg.similarity.min_overlap));
                        if let Some(s) = sim {
                            if cfg.similarity.positive_only && s <= 0.0 {
                                continue;
                            }
                            cands.push((v, s, r_vi));
                        }
                    }
                    cands.sort_by(|a, b| {
                        b.1.partial_cmp(&a.1)
                            .expect("defined similarities are finite")
                            .then_with(|| {
                                train
                                    .user_ref(a.0)
                                    .as_str()
                                    .cmp(train.user_ref(b.0).as_str())
                            })
                    });
                    let preds = prefix_predictions(
                        &cands,
                        ks,
                        &k_order,
                        cfg,
                        |v, s, r_vi| s * (r_vi - train.user_mean(v)),
                        |num, den| u_mean + num / den,
                        || {
                            fallback_prediction(train, Some(u), Some(i), cfg)
                                .expect("train checked non-empty")
                        },
                    );
                    out.push((pos, preds));
                }
                out
            },
        )
        .collect();

    Ok(scatter(per_group, ks.len(), test.rating_count()))
}

/// Evaluate II over every test pair for every k in `ks`, reusing one
/// similarity pass per test item. Output layout matches [`uu_sweep`].
pub fn ii_sweep(
    train: &Dataset,
    test: &Dataset,
    ks: &[usize],
    cfg: &PredictorConfig,
) -> Result<Vec<Vec<Prediction>>> {
    debug_assert_eq!(cfg.kind, AlgorithmKind::Ii);
    check_sweep(train, ks)?;

    let user_map: Vec<Option<u32>> = test.users().iter().map(|u| train.user_index(u)).collect();
    let item_map: Vec<Option<u32>> = test.items().iter().map(|i| train.item_index(i)).collect();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); test.item_count()];
    for (pos, r) in test.records().iter().enumerate() {
        groups[r.item as usize].push(pos);
    }
    let k_order = ascending_slots(ks);

    // Full-vector denominators are shared by every pair; precompute once.
    let norms2: Option<Vec<f64>> = cfg.similarity.full_vector_norms.then(|| {
        (0..train.item_count() as u32)
            .map(|j| sum_squares(train.ratings_by_item(j)))
            .collect()
    });

    let per_group: Vec<Vec<(usize, Vec<Prediction>)>> = groups
        .par_iter()
        .enumerate()
        .map_init(
            || AccBuffers::new(train.item_count()),
            |buf, (ti, positions)| {
                let mut out = Vec::with_capacity(positions.len());
                let Some(i) = item_map[ti] else {
                    for &pos in positions {
                        let user = user_map[test.records()[pos].user as usize];
                        let p = fallback_prediction(train, user, None, cfg)
                            .expect("train checked non-empty");
                        out.push((pos, vec![p; ks.len()]));
                    }
                    return out;
                };

                buf.begin();
                for &(v, x) in train.ratings_by_item(i) {
                    for &(j, y) in train.ratings_by_user(v) {
                        if j != i {
                            buf.acc(j, x, y);
                        }
                    }
                }
                let sim_of = |j: u32, s: &CoratedSums| {
                    let (nx2, ny2) = match &norms2 {
                        Some(n2) => (n2[i as usize], n2[j as usize]),
                        None => (s.sx2, s.sy2),
                    };
                    cosine_from_sums(s, nx2, ny2, cfg.similarity.min_overlap)
                };

                for &pos in positions {
                    let Some(u) = user_map[test.records()[pos].user as usize] else {
                        let p = fallback_prediction(train, None, Some(i), cfg)
                            .expect("train checked non-empty");
                        out.push((pos, vec![p; ks.len()]));
                        continue;
                    };
                    let mut cands: Vec<(u32, f64, f64)> = Vec::new();
                    for &(j, r_uj) in train.ratings_by_user(u) {
                        if j == i {
                            continue;
                        }
                        let sim = buf.get(j).and_then(|s| sim_of(j, s));
                        if let Some(s) = sim {
                            if cfg.similarity.positive_only && s <= 0.0 {
                                continue;
                            }
                            cands.push((j, s, r_uj));
                        }
                    }
                    cands.sort_by(|a, b| {
                        b.1.partial_cmp(&a.1)
                            .expect("defined similarities are finite")
                            .then_with(|| {
                                train
                                    .item_ref(a.0)
                                    .as_str()
                                    .cmp(train.item_ref(b.0).as_str())
                            })
                    });
                    let preds = prefix_predictions(
                        &cands,
                        ks,
                        &k_order,
                        cfg,
                        |_, s, r_uj| s * r_uj,
                        |num, den| num / den,
                        || {
                            fallback_prediction(train, Some(u), Some(i), cfg)
                                .expect("train checked non-empty")
                        },
                    );
                    out.push((pos, preds));
                }
                out
            },
        )
        .collect();

    Ok(scatter(per_group, ks.len(), test.rating_count()))
}

fn scatter(
    per_group: Vec<Vec<(usize, Vec<Prediction>)>>,
    sweep_len: usize,
    n: usize,
) -> Vec<Vec<Prediction>> {
    let mut out = vec![
        vec![
            Prediction {
                value: f64::NAN,
                served: false,
                fallback_level: None,
            };
            n
        ];
        sweep_len
    ];
    for group in per_group {
        for (pos, preds) in group {
            for (slot, p) in preds.into_iter().enumerate() {
                out[slot][pos] = p;
            }
        }
    }
    out
}
