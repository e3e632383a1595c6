//! Indexed rating collections: ingestion, generation, filtering, splitting,
//! merging, and the descriptive statistics behind dataset summary tables.
//!
//! A [`Dataset`] is immutable after construction and safe to share across
//! worker threads. Construction goes through [`DatasetBuilder`], which
//! enforces the value range and (user, item) uniqueness.

mod interchange;
mod ml1m;
mod ops;
mod synthetic;
mod types;

pub use interchange::{
    read_interchange, read_interchange_with_meta, read_item_meta, write_interchange,
    write_item_meta,
};
pub use ml1m::load_ml1m;
pub use ops::{
    activity_histogram, filter_min_ratings, merge, normalize_title, restrict_to_children,
    select_kplus_users, split, ItemMatching, MergeOutcome, RestrictMode,
};
pub use synthetic::{generate_synthetic, SynthParams};
pub use types::{ItemMeta, ItemRef, Rating, Source, UserRef, CHILDRENS_GENRE};

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

/// The three summary columns: distinct users, distinct items, rating count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub user_count: usize,
    pub item_count: usize,
    pub rating_count: usize,
}

/// Internally interned rating: indices into the dataset's user/item tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatingRecord {
    pub user: u32,
    pub item: u32,
    pub value: f64,
    pub source: Source,
}

/// An indexed, immutable rating collection with per-user and per-item
/// adjacency lists, optional item metadata, and cached mean statistics.
#[derive(Debug, Clone)]
pub struct Dataset {
    users: Vec<UserRef>,
    items: Vec<ItemRef>,
    user_lookup: HashMap<UserRef, u32>,
    item_lookup: HashMap<ItemRef, u32>,
    ratings: Vec<RatingRecord>,
    /// Per user: (item index, value), sorted by item index.
    by_user: Vec<Vec<(u32, f64)>>,
    /// Per item: (user index, value), sorted by user index.
    by_item: Vec<Vec<(u32, f64)>>,
    meta: Vec<Option<ItemMeta>>,
    user_means: Vec<f64>,
    item_means: Vec<f64>,
    global_mean: f64,
}

impl Dataset {
    pub fn empty() -> Self {
        DatasetBuilder::new().build()
    }

    pub fn stats(&self) -> DatasetStats {
        DatasetStats {
            user_count: self.users.len(),
            item_count: self.items.len(),
            rating_count: self.ratings.len(),
        }
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    pub fn rating_count(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    pub fn users(&self) -> &[UserRef] {
        &self.users
    }

    pub fn items(&self) -> &[ItemRef] {
        &self.items
    }

    pub fn user_index(&self, user: &UserRef) -> Option<u32> {
        self.user_lookup.get(user).copied()
    }

    pub fn item_index(&self, item: &ItemRef) -> Option<u32> {
        self.item_lookup.get(item).copied()
    }

    pub fn user_ref(&self, idx: u32) -> &UserRef {
        &self.users[idx as usize]
    }

    pub fn item_ref(&self, idx: u32) -> &ItemRef {
        &self.items[idx as usize]
    }

    /// Ratings in insertion order, as interned records.
    pub fn records(&self) -> &[RatingRecord] {
        &self.ratings
    }

    /// Ratings in insertion order, materialized with their refs.
    pub fn ratings(&self) -> impl Iterator<Item = Rating> + '_ {
        self.ratings.iter().map(|r| Rating {
            user: self.users[r.user as usize].clone(),
            item: self.items[r.item as usize].clone(),
            value: r.value,
            source: r.source,
        })
    }

    /// (item index, value) pairs for one user, sorted by item index.
    pub fn ratings_by_user(&self, user: u32) -> &[(u32, f64)] {
        &self.by_user[user as usize]
    }

    /// (user index, value) pairs for one item, sorted by user index.
    pub fn ratings_by_item(&self, item: u32) -> &[(u32, f64)] {
        &self.by_item[item as usize]
    }

    pub fn value_of(&self, user: u32, item: u32) -> Option<f64> {
        let row = &self.by_user[user as usize];
        row.binary_search_by_key(&item, |&(i, _)| i)
            .ok()
            .map(|pos| row[pos].1)
    }

    pub fn item_meta(&self, item: u32) -> Option<&ItemMeta> {
        self.meta[item as usize].as_ref()
    }

    pub fn is_children_item(&self, item: u32) -> bool {
        self.meta[item as usize]
            .as_ref()
            .map(|m| m.is_children)
            .unwrap_or(false)
    }

    /// Mean over all ratings, or `None` for an empty dataset.
    pub fn global_mean(&self) -> Option<f64> {
        (!self.ratings.is_empty()).then_some(self.global_mean)
    }

    /// Mean of one user's training ratings. Every indexed user has >= 1.
    pub fn user_mean(&self, user: u32) -> f64 {
        self.user_means[user as usize]
    }

    pub fn item_mean(&self, item: u32) -> f64 {
        self.item_means[item as usize]
    }

    /// All item metadata present in the dataset, in item-index order.
    pub fn item_metas(&self) -> impl Iterator<Item = &ItemMeta> {
        self.meta.iter().filter_map(|m| m.as_ref())
    }
}

/// Outcome of a [`DatasetBuilder::push`] that could not accept the rating.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PushError {
    OutOfRange,
    Duplicate,
}

/// Single-writer accumulator for [`Dataset`] construction.
///
/// Users and items are interned in first-appearance order, which keeps every
/// downstream artifact (interchange files, reports) deterministic for a fixed
/// rating sequence.
pub struct DatasetBuilder {
    users: Vec<UserRef>,
    items: Vec<ItemRef>,
    user_lookup: HashMap<UserRef, u32>,
    item_lookup: HashMap<ItemRef, u32>,
    ratings: Vec<RatingRecord>,
    seen: HashSet<(u32, u32)>,
    meta: HashMap<ItemRef, ItemMeta>,
}

impl DatasetBuilder {
    pub fn new() -> Self {
        DatasetBuilder {
            users: Vec::new(),
            items: Vec::new(),
            user_lookup: HashMap::new(),
            item_lookup: HashMap::new(),
            ratings: Vec::new(),
            seen: HashSet::new(),
            meta: HashMap::new(),
        }
    }

    /// Register metadata for an item. Metadata for items that never receive a
    /// rating is dropped at build time (the item index covers rated items
    /// only, matching the summary-statistics convention).
    pub fn add_item_meta(&mut self, meta: ItemMeta) {
        self.meta.insert(meta.item.clone(), meta);
    }

    fn intern_user(&mut self, user: &UserRef) -> u32 {
        if let Some(&idx) = self.user_lookup.get(user) {
            return idx;
        }
        let idx = self.users.len() as u32;
        self.users.push(user.clone());
        self.user_lookup.insert(user.clone(), idx);
        idx
    }

    fn intern_item(&mut self, item: &ItemRef) -> u32 {
        if let Some(&idx) = self.item_lookup.get(item) {
            return idx;
        }
        let idx = self.items.len() as u32;
        self.items.push(item.clone());
        self.item_lookup.insert(item.clone(), idx);
        idx
    }

    /// Add a rating, rejecting out-of-range values and duplicate
    /// (user, item) pairs.
    pub fn push(&mut self, rating: Rating) -> Result<(), PushError> {
        match self.push_keep_first(rating) {
            Ok(true) => Ok(()),
            Ok(false) => Err(PushError::Duplicate),
            Err(e) => Err(e),
        }
    }

    /// Add a rating unless the (user, item) pair is already present; returns
    /// whether the rating was kept. Used by merge, where collisions are
    /// counted instead of rejected.
    pub fn push_keep_first(&mut self, rating: Rating) -> Result<bool, PushError> {
        if !(1.0..=5.0).contains(&rating.value) || !rating.value.is_finite() {
            return Err(PushError::OutOfRange);
        }
        let user = self.intern_user(&rating.user);
        let item = self.intern_item(&rating.item);
        if !self.seen.insert((user, item)) {
            return Ok(false);
        }
        self.ratings.push(RatingRecord {
            user,
            item,
            value: rating.value,
            source: rating.source,
        });
        Ok(true)
    }

    pub fn build(self) -> Dataset {
        // Users or items interned without surviving ratings (possible only if
        // a caller interleaved meta; pushes always add a rating) are absent by
        // construction: every intern call comes from a kept rating.
        let user_count = self.users.len();
        let item_count = self.items.len();

        let mut by_user: Vec<Vec<(u32, f64)>> = vec![Vec::new(); user_count];
        let mut by_item: Vec<Vec<(u32, f64)>> = vec![Vec::new(); item_count];
        for r in &self.ratings {
            by_user[r.user as usize].push((r.item, r.value));
            by_item[r.item as usize].push((r.user, r.value));
        }
        for row in &mut by_user {
            row.sort_unstable_by_key(|&(i, _)| i);
        }
        for row in &mut by_item {
            row.sort_unstable_by_key(|&(u, _)| u);
        }

        let user_means = by_user
            .iter()
            .map(|row| row.iter().map(|&(_, v)| v).sum::<f64>() / row.len() as f64)
            .collect();
        let item_means = by_item
            .iter()
            .map(|row| row.iter().map(|&(_, v)| v).sum::<f64>() / row.len() as f64)
            .collect();
        let global_mean = if self.ratings.is_empty() {
            0.0
        } else {
            self.ratings.iter().map(|r| r.value).sum::<f64>() / self.ratings.len() as f64
        };

        let mut meta_by_idx: Vec<Option<ItemMeta>> = vec![None; item_count];
        let mut meta = self.meta;
        for (idx, item) in self.items.iter().enumerate() {
            if let Some(m) = meta.remove(item) {
                meta_by_idx[idx] = Some(m);
            }
        }

        Dataset {
            users: self.users,
            items: self.items,
            user_lookup: self.user_lookup,
            item_lookup: self.item_lookup,
            ratings: self.ratings,
            by_user,
            by_item,
            meta: meta_by_idx,
            user_means,
            item_means,
            global_mean,
        }
    }
}

impl Default for DatasetBuilder {
    fn default() -> Self {
        Self::new()
    }
}
