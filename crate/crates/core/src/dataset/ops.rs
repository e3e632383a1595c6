//! Dataset composition operations: min-ratings filtering, random splitting,
//! merging with item unification, special-user selection, and the
//! user-activity histogram.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetBuilder, ItemRef, Rating, UserRef};
use crate::error::{Error, Result};

/// Keep exactly the users with at least `k` ratings, with all their ratings.
/// Items left without ratings drop out of the item index. Applied once: a
/// single pass, no fixed-point re-filtering.
pub fn filter_min_ratings(ds: &Dataset, k: usize) -> Dataset {
    let mut builder = DatasetBuilder::new();
    for meta in ds.item_metas() {
        builder.add_item_meta(meta.clone());
    }
    for r in ds.records() {
        if ds.ratings_by_user(r.user).len() >= k {
            builder
                .push(Rating {
                    user: ds.user_ref(r.user).clone(),
                    item: ds.item_ref(r.item).clone(),
                    value: r.value,
                    source: r.source,
                })
                .expect("source dataset is already deduplicated");
        }
    }
    builder.build()
}

/// Global uniform random partition of ratings. A user or item may appear on
/// both sides. Train size is `floor(train_fraction * n + 0.5)`; the split is
/// deterministic per seed.
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train_fraction must lie strictly between 0 and 1, got {train_fraction}"
        )));
    }
    let n = ds.rating_count();
    let train_size = (train_fraction * n as f64 + 0.5).floor() as usize;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut in_train = vec![false; n];
    for &idx in order.iter().take(train_size) {
        in_train[idx] = true;
    }

    let mut train = DatasetBuilder::new();
    let mut test = DatasetBuilder::new();
    for meta in ds.item_metas() {
        train.add_item_meta(meta.clone());
        test.add_item_meta(meta.clone());
    }
    for (idx, r) in ds.records().iter().enumerate() {
        let rating = Rating {
            user: ds.user_ref(r.user).clone(),
            item: ds.item_ref(r.item).clone(),
            value: r.value,
            source: r.source,
        };
        let side = if in_train[idx] { &mut train } else { &mut test };
        side.push(rating).expect("source dataset is already deduplicated");
    }
    Ok((train.build(), test.build()))
}

/// How item spaces relate when two datasets are merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemMatching {
    /// Unify items whose normalized (title, year) keys coincide.
    ByTitleYear,
    /// Item spaces stay disjoint (identical refs still denote one item).
    None,
}

#[derive(Debug)]
pub struct MergeOutcome {
    pub dataset: Dataset,
    /// Items of `b` that were unified into an item of `a` by title/year.
    pub unified_items: usize,
    /// (user, item) pairs of `b` dropped because `a` already contained them.
    pub collisions: usize,
}

/// Normalize a title for cross-corpus matching: lowercase, leading article
/// moved trailing (MovieLens convention), punctuation stripped, whitespace
/// collapsed.
pub fn normalize_title(title: &str) -> String {
    let lower = title.trim().to_lowercase();
    let mut arranged = lower.clone();
    for article in ["the ", "a ", "an "] {
        if let Some(rest) = lower.strip_prefix(article) {
            arranged = format!("{}, {}", rest, article.trim());
            break;
        }
    }
    arranged
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn years_compatible(a: Option<i32>, b: Option<i32>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x == y,
        _ => true,
    }
}

/// Union of two datasets. User namespaces are expected to be disjoint by
/// construction. Under [`ItemMatching::ByTitleYear`], items of `b` whose
/// normalized title and year match an item of `a` adopt `a`'s ref (and
/// metadata). Duplicate (user, item) pairs keep the first occurrence and are
/// counted in the outcome.
pub fn merge(a: &Dataset, b: &Dataset, matching: ItemMatching) -> MergeOutcome {
    // Map each of b's item indices to the ref it carries into the union.
    let mut mapping: HashMap<u32, ItemRef> = HashMap::new();
    let mut unified: HashSet<u32> = HashSet::new();
    if matching == ItemMatching::ByTitleYear {
        let mut key_map: HashMap<String, Vec<(Option<i32>, ItemRef)>> = HashMap::new();
        for meta in a.item_metas() {
            key_map
                .entry(normalize_title(&meta.title))
                .or_default()
                .push((meta.year, meta.item.clone()));
        }
        for (idx, item) in b.items().iter().enumerate() {
            let idx = idx as u32;
            if a.item_index(item).is_some() {
                continue; // identical refs already denote the same item
            }
            let Some(meta) = b.item_meta(idx) else { continue };
            if let Some(candidates) = key_map.get(&normalize_title(&meta.title)) {
                if let Some((_, target)) = candidates
                    .iter()
                    .find(|(year, _)| years_compatible(*year, meta.year))
                {
                    mapping.insert(idx, target.clone());
                    unified.insert(idx);
                }
            }
        }
    }

    let mut builder = DatasetBuilder::new();
    for (idx, _) in b.items().iter().enumerate() {
        if !unified.contains(&(idx as u32)) {
            if let Some(meta) = b.item_meta(idx as u32) {
                builder.add_item_meta(meta.clone());
            }
        }
    }
    // a's metadata wins for unified refs.
    for meta in a.item_metas() {
        builder.add_item_meta(meta.clone());
    }

    for r in a.records() {
        builder
            .push(Rating {
                user: a.user_ref(r.user).clone(),
                item: a.item_ref(r.item).clone(),
                value: r.value,
                source: r.source,
            })
            .expect("left dataset is already deduplicated");
    }

    let mut collisions = 0usize;
    for r in b.records() {
        let item = mapping
            .get(&r.item)
            .cloned()
            .unwrap_or_else(|| b.item_ref(r.item).clone());
        let kept = builder
            .push_keep_first(Rating {
                user: b.user_ref(r.user).clone(),
                item,
                value: r.value,
                source: r.source,
            })
            .expect("values were validated on first ingestion");
        if !kept {
            collisions += 1;
        }
    }

    MergeOutcome {
        dataset: builder.build(),
        unified_items: unified.len(),
        collisions,
    }
}

/// Users with at least `min_children` ratings on children's items.
pub fn select_kplus_users(ds: &Dataset, min_children: usize) -> BTreeSet<UserRef> {
    let mut out = BTreeSet::new();
    for (user_idx, row) in (0..ds.user_count() as u32).map(|u| (u, ds.ratings_by_user(u))) {
        let children = row
            .iter()
            .filter(|&&(item, _)| ds.is_children_item(item))
            .count();
        if children >= min_children {
            out.insert(ds.user_ref(user_idx).clone());
        }
    }
    out
}

/// Which of a selected user's ratings survive [`restrict_to_children`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestrictMode {
    /// Only ratings on children's items (matches the published corpus sizes).
    ChildrenOnly,
    /// Every rating of the selected users.
    AllRatings,
}

/// Keep ratings of the given users; under [`RestrictMode::ChildrenOnly`]
/// additionally require the rated item to be a children's item.
pub fn restrict_to_children(ds: &Dataset, users: &BTreeSet<UserRef>, mode: RestrictMode) -> Dataset {
    let selected: HashSet<u32> = users.iter().filter_map(|u| ds.user_index(u)).collect();
    let mut builder = DatasetBuilder::new();
    for meta in ds.item_metas() {
        builder.add_item_meta(meta.clone());
    }
    for r in ds.records() {
        if !selected.contains(&r.user) {
            continue;
        }
        if mode == RestrictMode::ChildrenOnly && !ds.is_children_item(r.item) {
            continue;
        }
        builder
            .push(Rating {
                user: ds.user_ref(r.user).clone(),
                item: ds.item_ref(r.item).clone(),
                value: r.value,
                source: r.source,
            })
            .expect("source dataset is already deduplicated");
    }
    builder.build()
}

/// Exact ratings-per-user histogram: bucket = rating count, value = how many
/// users have exactly that count. Bucketing for display is the consumer's job.
pub fn activity_histogram(ds: &Dataset) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for u in 0..ds.user_count() as u32 {
        *hist.entry(ds.ratings_by_user(u).len()).or_insert(0) += 1;
    }
    hist
}
