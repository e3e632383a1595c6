//! Shared fixtures for the benchmarks: seeded synthetic corpora sized so a
//! full run finishes in minutes, plus the optional ML1M paths.

use std::path::PathBuf;

use crossrec_core::dataset::{generate_synthetic, split, Dataset, Source, SynthParams};
use crossrec_core::harness::DATA_DIR_ENV;

/// Child-audience corpus with the same shape the bundled presets use.
pub fn child_corpus() -> Dataset {
    generate_synthetic(&SynthParams {
        user_count: 450,
        item_count: 120,
        target_rating_count: 18_000,
        activity_exponent: 1.5,
        min_ratings_per_user: 5,
        value_distribution: [0.02, 0.04, 0.12, 0.65, 0.17],
        interaction_effect: 1.5,
        user_namespace: "dogo".to_string(),
        item_namespace: "movie".to_string(),
        source: Source::Child,
        seed: 12,
        ..SynthParams::default()
    })
    .expect("valid params")
}

/// 60/40 split of the child corpus, shared by the sweep benchmarks.
pub fn child_split() -> (Dataset, Dataset) {
    split(&child_corpus(), 0.6, 3).expect("valid fraction")
}

/// ML1M file paths when the data directory is configured, else `None`.
pub fn ml1m_paths() -> Option<(PathBuf, PathBuf)> {
    let dir = std::env::var_os(DATA_DIR_ENV).map(PathBuf::from)?;
    let ratings = dir.join("ml-1m/ratings.dat");
    let movies = dir.join("ml-1m/movies.dat");
    (ratings.is_file() && movies.is_file()).then_some((ratings, movies))
}
