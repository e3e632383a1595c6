//! Seeded synthetic rating generator.
//!
//! Stands in for non-public child-audience rating data: per-user activity
//! follows a truncated power law, values are drawn i.i.d. from a categorical
//! distribution over the five star levels. Two generated datasets share an
//! item catalog when configured with the same item namespace, which lets
//! merge experiments unify their items.

use std::collections::BTreeSet;
use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetBuilder, ItemMeta, ItemRef, Rating, Source, UserRef, CHILDRENS_GENRE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub user_count: usize,
    pub item_count: usize,
    pub target_rating_count: usize,
    /// Exponent of the ratings-per-user power law: P(c) proportional to
    /// c^(-activity_exponent) on [min_ratings_per_user, item_count].
    pub activity_exponent: f64,
    /// Lower truncation of the activity law. 1 for child-like corpora; 20
    /// mimics the MovieLens inclusion rule.
    pub min_ratings_per_user: usize,
    /// Probabilities for the values 1..=5. Must sum to 1.
    pub value_distribution: [f64; 5],
    /// Half-width, in stars, of a per-item quality offset. Each item gets a
    /// fixed offset drawn uniformly from [-item_effect, item_effect] (on a
    /// dedicated RNG stream, so 0 reproduces the plain i.i.d. draw exactly);
    /// sampled values are shifted by it, rounded, and clamped to [1, 5].
    /// Offsets depend on the seed, so two corpora sharing an item catalog
    /// still disagree about which items are good.
    pub item_effect: f64,
    /// Strength, in stars, of a latent preference interaction: every user
    /// and every item draw a trait in [-1, 1] and each value additionally
    /// shifts by interaction_effect times the trait product. This gives
    /// similarity kernels real co-rating structure to pick up; like the
    /// item offsets, the traits are seed-dependent, so corpora with
    /// different seeds disagree about which items go together.
    pub interaction_effect: f64,
    /// Leading fraction of the item catalog flagged as children's titles.
    pub children_fraction: f64,
    pub user_namespace: String,
    pub item_namespace: String,
    pub source: Source,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            user_count: 1000,
            item_count: 500,
            target_rating_count: 3000,
            activity_exponent: 2.4,
            min_ratings_per_user: 1,
            // Concentrated on 4-5, the shape observed in child-audience data.
            value_distribution: [0.02, 0.03, 0.10, 0.35, 0.50],
            item_effect: 0.0,
            interaction_effect: 0.0,
            children_fraction: 1.0,
            user_namespace: "synth".to_string(),
            item_namespace: "synth".to_string(),
            source: Source::Synth,
            seed: 0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.user_count == 0 || self.item_count == 0 || self.target_rating_count == 0 {
            return Err(Error::Infeasible("all counts must be positive".into()));
        }
        let sum: f64 = self.value_distribution.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Infeasible(format!(
                "value_distribution sums to {sum}, expected 1"
            )));
        }
        if self.value_distribution.iter().any(|&p| p < 0.0) {
            return Err(Error::Infeasible("value_distribution has negative mass".into()));
        }
        if !(self.activity_exponent.is_finite() && self.activity_exponent > 0.0) {
            return Err(Error::Infeasible("activity_exponent must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.children_fraction) {
            return Err(Error::Infeasible("children_fraction must lie in [0, 1]".into()));
        }
        if !(self.item_effect.is_finite() && self.item_effect >= 0.0) {
            return Err(Error::Infeasible("item_effect must be finite and >= 0".into()));
        }
        if !(self.interaction_effect.is_finite() && self.interaction_effect >= 0.0) {
            return Err(Error::Infeasible(
                "interaction_effect must be finite and >= 0".into(),
            ));
        }
        if self.min_ratings_per_user < 1 || self.min_ratings_per_user > self.item_count {
            return Err(Error::Infeasible(
                "min_ratings_per_user must lie in [1, item_count]".into(),
            ));
        }
        if self.target_rating_count > self.user_count * self.item_count {
            return Err(Error::Infeasible(format!(
                "target_rating_count {} exceeds user_count * item_count = {}",
                self.target_rating_count,
                self.user_count * self.item_count
            )));
        }
        if self.target_rating_count < self.user_count * self.min_ratings_per_user {
            return Err(Error::Infeasible(format!(
                "target_rating_count {} cannot give every user {} ratings",
                self.target_rating_count, self.min_ratings_per_user
            )));
        }
        Ok(())
    }
}

/// Sample per-user rating counts from the truncated power law, then nudge
/// them (clamped to the support) until they sum to the exact target.
fn activity_counts(params: &SynthParams, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let lo = params.min_ratings_per_user;
    let hi = params.item_count;

    let mut cumulative = Vec::with_capacity(hi - lo + 1);
    let mut acc = 0.0;
    for c in lo..=hi {
        acc += (c as f64).powf(-params.activity_exponent);
        cumulative.push(acc);
    }
    let total_mass = acc;

    let mut counts: Vec<usize> = (0..params.user_count)
        .map(|_| {
            let x = rng.gen::<f64>() * total_mass;
            let pos = cumulative.partition_point(|&cum| cum < x);
            lo + pos.min(hi - lo)
        })
        .collect();

    let target = params.target_rating_count;
    let mut total: usize = counts.iter().sum();
    if total != target {
        let factor = target as f64 / total as f64;
        for c in &mut counts {
            *c = ((*c as f64 * factor).round() as usize).clamp(lo, hi);
        }
        total = counts.iter().sum();
    }
    // Residual off-by-rounding corrections, round-robin over users.
    let mut idx = 0;
    while total < target {
        if counts[idx] < hi {
            counts[idx] += 1;
            total += 1;
        }
        idx = (idx + 1) % counts.len();
    }
    let mut idx = 0;
    while total > target {
        if counts[idx] > lo {
            counts[idx] -= 1;
            total -= 1;
        }
        idx = (idx + 1) % counts.len();
    }
    counts
}

/// Choose `count` distinct item indices uniformly from `0..item_count`.
fn distinct_items(count: usize, item_count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if count * 4 >= item_count {
        // Dense case: partial Fisher-Yates over the whole catalog.
        let mut pool: Vec<usize> = (0..item_count).collect();
        for i in 0..count {
            let j = rng.gen_range(i..item_count);
            pool.swap(i, j);
        }
        pool.truncate(count);
        pool
    } else {
        let mut chosen = HashSet::with_capacity(count);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let i = rng.gen_range(0..item_count);
            if chosen.insert(i) {
                out.push(i);
            }
        }
        out
    }
}

fn sample_value(distribution: &[f64; 5], rng: &mut ChaCha8Rng) -> f64 {
    let x: f64 = rng.gen();
    let mut acc = 0.0;
    for (level, &p) in distribution.iter().enumerate() {
        acc += p;
        if x < acc {
            return (level + 1) as f64;
        }
    }
    5.0
}

/// Uniform draws in [-half_width, half_width] on a dedicated RNG stream,
/// so enabling an effect does not disturb the main sampling sequence.
fn trait_draws(count: usize, half_width: f64, seed: u64, stream: u64) -> Vec<f64> {
    if half_width == 0.0 {
        return vec![0.0; count];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..count)
        .map(|_| half_width * (2.0 * rng.gen::<f64>() - 1.0))
        .collect()
}

/// Generate a dataset from `params`, deterministically for a fixed seed.
pub fn generate_synthetic(params: &SynthParams) -> Result<Dataset> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let counts = activity_counts(params, &mut rng);
    let offsets = trait_draws(params.item_count, params.item_effect, params.seed, 1);
    let trait_width = if params.interaction_effect > 0.0 { 1.0 } else { 0.0 };
    let thetas = trait_draws(params.user_count, trait_width, params.seed, 2);
    let phis = trait_draws(params.item_count, trait_width, params.seed, 3);

    let mut builder = DatasetBuilder::new();
    let children_items = (params.children_fraction * params.item_count as f64).round() as usize;
    for idx in 0..params.item_count {
        let year = 1980 + (idx % 40) as i32;
        let genres: BTreeSet<String> = if idx < children_items {
            [CHILDRENS_GENRE.to_string()].into_iter().collect()
        } else {
            ["Drama".to_string()].into_iter().collect()
        };
        builder.add_item_meta(ItemMeta::new(
            ItemRef::namespaced(&params.item_namespace, format!("i{idx}")),
            format!("Movie {:05} ({year})", idx + 1),
            Some(year),
            genres,
        ));
    }

    for (user_idx, &count) in counts.iter().enumerate() {
        let user = UserRef::namespaced(&params.user_namespace, format!("u{user_idx}"));
        let items = distinct_items(count, params.item_count, &mut rng);
        for item_idx in items {
            let base = sample_value(&params.value_distribution, &mut rng);
            let shift = offsets[item_idx]
                + params.interaction_effect * thetas[user_idx] * phis[item_idx];
            let value = (base + shift).round().clamp(1.0, 5.0);
            let rating = Rating::new(
                user.clone(),
                ItemRef::namespaced(&params.item_namespace, format!("i{item_idx}")),
                value,
                params.source,
            );
            builder
                .push(rating)
                .expect("generator produces in-range, distinct pairs");
        }
    }

    Ok(builder.build())
}
