//! Collaborative-filtering engine and experiment harness for cross-audience
//! rating prediction.
//!
//! The crate is organized around six modules:
//!
//! - [`dataset`]: rating ingestion (MovieLens-1M native format), synthetic
//!   generation, filtering, splitting, merging, and descriptive statistics.
//! - [`similarity`]: item-item cosine and user-user Pearson kernels over
//!   sparse rating data, plus top-k neighborhood selection.
//! - [`algorithms`]: the three recommenders behind one predict contract:
//!   user-user KNN, item-item KNN, and biased matrix factorization trained
//!   by SGD.
//! - [`evaluation`]: RMSE and coverage reports.
//! - [`stats`]: paired t-test on per-pair squared errors.
//! - [`harness`]: declarative experiment specs, sweep execution, and
//!   table-style reporting.

pub mod algorithms;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod harness;
pub mod similarity;
pub mod stats;

pub use dataset::{Dataset, DatasetBuilder, DatasetStats, ItemMeta, ItemRef, Rating, Source, UserRef};
pub use error::{Error, Result};
