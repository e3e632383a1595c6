//! Declarative experiment specs: the TOML schema, parsing, and validation.
//!
//! A spec names an experiment, composes dataset operations into a recipe
//! (an ordered step list; every input must be declared by an earlier step,
//! which makes the recipe acyclic by construction), picks an evaluation
//! protocol, and sets the hyperparameter sweeps. Example:
//!
//! ```toml
//! name = "child-only"
//! seed = 42
//!
//! [[step]]
//! op = "generate"
//! id = "child"
//! user_count = 400
//! item_count = 240
//! target_rating_count = 16000
//!
//! [[step]]
//! op = "filter_min_ratings"
//! id = "child_2"
//! input = "child"
//! min_ratings = 2
//!
//! [evaluation]
//! protocol = "cross_validation"
//! dataset = "child_2"
//! folds = 5
//!
//! [sweeps]
//! algorithms = ["uu", "ii", "mf"]
//! neighborhood_sizes = [20, 50, 80]
//! latent_factors = [20, 40]
//! ```
//!
//! Seeds compose: `generate` steps carry a seed that is added to the
//! spec-level seed at materialization time, and `split` steps add their
//! `seed_offset` likewise. Overriding the spec seed therefore reshuffles
//! every randomized step at once while keeping steps distinct.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algorithms::{
    AlgorithmKind, PredictorConfig, DEFAULT_INIT_SCALE, DEFAULT_ITERATIONS,
    DEFAULT_LEARNING_RATE, DEFAULT_REGULARIZATION,
};
use crate::dataset::{ItemMatching, RestrictMode, SynthParams};
use crate::error::{Error, Result};

/// Environment variable naming the directory that rating data files are
/// resolved against. Only consulted for relative paths in load steps.
pub const DATA_DIR_ENV: &str = "CROSSREC_DATA_DIR";

/// Default neighborhood-size sweep for the KNN recommenders.
pub const DEFAULT_NEIGHBORHOOD_SIZES: &[usize] = &[50, 80, 100, 120, 150, 200, 250];

/// Default latent-factor sweep for MF.
pub const DEFAULT_LATENT_FACTORS: &[usize] = &[40, 60, 80, 120];

pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.6;

fn default_folds() -> usize {
    DEFAULT_FOLDS
}

fn default_train_fraction() -> f64 {
    DEFAULT_TRAIN_FRACTION
}

fn default_matching() -> ItemMatching {
    ItemMatching::ByTitleYear
}

fn default_restrict_mode() -> RestrictMode {
    RestrictMode::ChildrenOnly
}

fn default_ml1m_ratings() -> String {
    "ml-1m/ratings.dat".to_string()
}

fn default_ml1m_movies() -> String {
    "ml-1m/movies.dat".to_string()
}

/// One recipe step. `op` selects the dataset operation; the remaining keys
/// are its parameters. Steps run in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Step {
    /// Parse the MovieLens-1M `.dat` pair. Relative paths resolve against
    /// the data directory.
    LoadMl1m {
        id: String,
        #[serde(default = "default_ml1m_ratings")]
        ratings: String,
        #[serde(default = "default_ml1m_movies")]
        movies: String,
    },
    /// Read an interchange ratings file, optionally with its item metadata
    /// sidecar.
    Load {
        id: String,
        ratings: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        items: Option<String>,
    },
    /// Run the synthetic generator. The embedded `seed` acts as an offset
    /// on the spec seed.
    Generate {
        id: String,
        #[serde(flatten)]
        params: SynthParams,
    },
    /// Keep only users with at least `min_ratings` ratings.
    FilterMinRatings {
        id: String,
        input: String,
        min_ratings: usize,
    },
    /// Random rating partition into a train and a test dataset.
    Split {
        input: String,
        train: String,
        test: String,
        #[serde(default = "default_train_fraction")]
        train_fraction: f64,
        #[serde(default)]
        seed_offset: u64,
    },
    /// Union of two datasets; `left` wins (user, item) collisions and
    /// metadata disagreements.
    Merge {
        id: String,
        left: String,
        right: String,
        #[serde(default = "default_matching")]
        matching: ItemMatching,
    },
    /// Select users with at least `min_children` ratings on children's
    /// items, then restrict the dataset to those users per `mode`.
    Kplus {
        id: String,
        input: String,
        min_children: usize,
        #[serde(default = "default_restrict_mode")]
        mode: RestrictMode,
    },
}

impl Step {
    /// Short human label used in error messages, e.g. `split 'child_tr'`.
    pub fn label(&self) -> String {
        match self {
            Step::LoadMl1m { id, .. } => format!("load_ml1m '{id}'"),
            Step::Load { id, .. } => format!("load '{id}'"),
            Step::Generate { id, .. } => format!("generate '{id}'"),
            Step::FilterMinRatings { id, .. } => format!("filter_min_ratings '{id}'"),
            Step::Split { train, test, .. } => format!("split '{train}'/'{test}'"),
            Step::Merge { id, .. } => format!("merge '{id}'"),
            Step::Kplus { id, .. } => format!("kplus '{id}'"),
        }
    }

    /// Dataset ids this step produces.
    pub fn outputs(&self) -> Vec<&str> {
        match self {
            Step::LoadMl1m { id, .. }
            | Step::Load { id, .. }
            | Step::Generate { id, .. }
            | Step::FilterMinRatings { id, .. }
            | Step::Merge { id, .. }
            | Step::Kplus { id, .. } => vec![id],
            Step::Split { train, test, .. } => vec![train, test],
        }
    }

    /// Dataset ids this step consumes.
    pub fn inputs(&self) -> Vec<&str> {
        match self {
            Step::LoadMl1m { .. } | Step::Load { .. } | Step::Generate { .. } => vec![],
            Step::FilterMinRatings { input, .. } | Step::Kplus { input, .. } => vec![input],
            Step::Split { input, .. } => vec![input],
            Step::Merge { left, right, .. } => vec![left, right],
        }
    }
}

/// Evaluation protocol. Single datasets default to 5-fold cross-validation
/// over ratings with the per-fold RMSEs averaged; recipes that split
/// explicitly use `holdout` on the two named datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "snake_case")]
pub enum Protocol {
    CrossValidation {
        dataset: String,
        #[serde(default = "default_folds")]
        folds: usize,
    },
    Holdout { train: String, test: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    #[serde(flatten)]
    pub protocol: Protocol,
    /// Upper bound on evaluated test pairs. Larger test sets are subsampled
    /// (seeded, spread evenly over folds) and the report says so.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_test_pairs: Option<usize>,
}

/// Hyperparameter grids. Values are deduplicated and swept in ascending
/// order; ties on RMSE resolve to the smaller parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Sweeps {
    pub algorithms: Vec<AlgorithmKind>,
    pub neighborhood_sizes: Vec<usize>,
    pub latent_factors: Vec<usize>,
}

impl Default for Sweeps {
    fn default() -> Self {
        Sweeps {
            algorithms: AlgorithmKind::all().to_vec(),
            neighborhood_sizes: DEFAULT_NEIGHBORHOOD_SIZES.to_vec(),
            latent_factors: DEFAULT_LATENT_FACTORS.to_vec(),
        }
    }
}

/// MF training knobs shared by every latent-factor sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MfParams {
    pub learning_rate: f64,
    pub regularization: f64,
    pub iterations: usize,
    pub init_scale: f64,
}

impl Default for MfParams {
    fn default() -> Self {
        MfParams {
            learning_rate: DEFAULT_LEARNING_RATE,
            regularization: DEFAULT_REGULARIZATION,
            iterations: DEFAULT_ITERATIONS,
            init_scale: DEFAULT_INIT_SCALE,
        }
    }
}

/// Which dataset the `histogram` command summarizes. Defaults to the
/// dataset the evaluation protocol trains on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSection {
    pub dataset: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, rename = "step")]
    pub steps: Vec<Step>,
    pub evaluation: Evaluation,
    #[serde(default)]
    pub sweeps: Sweeps,
    #[serde(default)]
    pub mf: MfParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram: Option<HistogramSection>,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<ExperimentSpec> {
        let spec: ExperimentSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<ExperimentSpec> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Swept algorithms in canonical UU, II, MF order, deduplicated.
    pub fn algorithm_order(&self) -> Vec<AlgorithmKind> {
        AlgorithmKind::all()
            .into_iter()
            .filter(|k| self.sweeps.algorithms.contains(k))
            .collect()
    }

    /// Ascending deduplicated sweep values for one algorithm.
    pub fn sweep_values(&self, kind: AlgorithmKind) -> Vec<usize> {
        let raw = match kind {
            AlgorithmKind::Uu | AlgorithmKind::Ii => &self.sweeps.neighborhood_sizes,
            AlgorithmKind::Mf => &self.sweeps.latent_factors,
        };
        let mut values = raw.clone();
        values.sort_unstable();
        values.dedup();
        values
    }

    /// Predictor configuration for one sweep point, seeded by the spec.
    pub fn predictor_config(&self, kind: AlgorithmKind, parameter: usize) -> PredictorConfig {
        let mut cfg = match kind {
            AlgorithmKind::Uu => PredictorConfig::uu(parameter),
            AlgorithmKind::Ii => PredictorConfig::ii(parameter),
            AlgorithmKind::Mf => {
                let mut cfg = PredictorConfig::mf(parameter);
                cfg.learning_rate = self.mf.learning_rate;
                cfg.regularization = self.mf.regularization;
                cfg.iterations = self.mf.iterations;
                cfg.init_scale = self.mf.init_scale;
                cfg
            }
        };
        cfg.seed = self.seed;
        cfg
    }

    /// `min_ratings` values of the filter steps, in recipe order (the `x`
    /// column of the report).
    pub fn min_ratings_filters(&self) -> Vec<usize> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                Step::FilterMinRatings { min_ratings, .. } => Some(*min_ratings),
                _ => None,
            })
            .collect()
    }

    /// Check every invariant that does not require touching data: declared
    /// references, unique ids, feasible parameters, non-empty sweeps. Runs
    /// before any materialization so config mistakes fail fast.
    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Config("experiment name must be non-empty".to_string()));
        }

        let mut declared: BTreeSet<&str> = BTreeSet::new();
        for step in &self.steps {
            let label = step.label();
            for input in step.inputs() {
                if !declared.contains(input) {
                    return Err(Error::Config(format!(
                        "{label}: input '{input}' is not a previously declared dataset"
                    )));
                }
            }
            for output in step.outputs() {
                if output.trim().is_empty() {
                    return Err(Error::Config(format!("{label}: empty dataset id")));
                }
                if !declared.insert(output) {
                    return Err(Error::Config(format!(
                        "{label}: dataset id '{output}' is already declared"
                    )));
                }
            }
            match step {
                Step::Generate { params, .. } => params.validate()?,
                Step::Split { train_fraction, .. } => {
                    if !(*train_fraction > 0.0 && *train_fraction < 1.0) {
                        return Err(Error::Config(format!(
                            "{label}: train_fraction must lie strictly between 0 and 1, got {train_fraction}"
                        )));
                    }
                }
                Step::Kplus { min_children, .. } => {
                    if *min_children < 1 {
                        return Err(Error::Config(format!(
                            "{label}: min_children must be >= 1"
                        )));
                    }
                }
                _ => {}
            }
        }

        let check_ref = |role: &str, name: &str| -> Result<()> {
            if declared.contains(name) {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "evaluation {role} '{name}' is not a declared dataset"
                )))
            }
        };
        match &self.evaluation.protocol {
            Protocol::CrossValidation { dataset, folds } => {
                check_ref("dataset", dataset)?;
                if *folds < 2 {
                    return Err(Error::Config("cross-validation needs at least 2 folds".to_string()));
                }
            }
            Protocol::Holdout { train, test } => {
                check_ref("train", train)?;
                check_ref("test", test)?;
            }
        }
        if self.evaluation.max_test_pairs == Some(0) {
            return Err(Error::Config("max_test_pairs must be >= 1".to_string()));
        }

        if self.sweeps.algorithms.is_empty() {
            return Err(Error::Config("sweeps.algorithms must be non-empty".to_string()));
        }
        for kind in self.algorithm_order() {
            let values = self.sweep_values(kind);
            if values.is_empty() {
                return Err(Error::Config(format!(
                    "sweep for {kind} must be non-empty"
                )));
            }
            // Validates the shared MF knobs too, via the first sweep point.
            self.predictor_config(kind, values[0]).validate()?;
        }

        if let Some(h) = &self.histogram {
            if !declared.contains(h.dataset.as_str()) {
                return Err(Error::Config(format!(
                    "histogram dataset '{}' is not a declared dataset",
                    h.dataset
                )));
            }
        }
        Ok(())
    }

    /// Dataset the protocol trains on; the histogram default.
    pub fn histogram_dataset(&self) -> &str {
        if let Some(h) = &self.histogram {
            return &h.dataset;
        }
        match &self.evaluation.protocol {
            Protocol::CrossValidation { dataset, .. } => dataset,
            Protocol::Holdout { train, .. } => train,
        }
    }
}
