//! The three recommenders behind one predict contract: user-user KNN,
//! item-item KNN, and biased matrix factorization trained by SGD.
//!
//! Every predictor produces a [`Prediction`] for every (user, item) pair.
//! When the model proper cannot serve a pair, the configured fallback chain
//! supplies a mean statistic instead; such predictions carry `served =
//! false` so coverage can be reported independently of RMSE.

mod fallback;
mod knn;
mod mf;

pub use fallback::{fallback, fallback_idx};
pub use knn::{ii_predict, ii_sweep, uu_predict, uu_sweep};
pub use mf::{mf_predict, mf_train, MFModel};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, ItemRef, UserRef};
use crate::error::{Error, Result};
use crate::similarity::SimilarityOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    /// User-user KNN with Pearson similarity.
    Uu,
    /// Item-item KNN with cosine similarity.
    Ii,
    /// Biased matrix factorization trained by SGD.
    Mf,
}

impl AlgorithmKind {
    pub fn label(self) -> &'static str {
        match self {
            AlgorithmKind::Uu => "UU",
            AlgorithmKind::Ii => "II",
            AlgorithmKind::Mf => "MF",
        }
    }

    pub fn all() -> [AlgorithmKind; 3] {
        [AlgorithmKind::Uu, AlgorithmKind::Ii, AlgorithmKind::Mf]
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One stage of the fallback chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackStage {
    ItemMean,
    UserMean,
    GlobalMean,
}

/// Ordered fallback stages. The chain always terminates in
/// [`FallbackStage::GlobalMean`], which is defined for any non-empty
/// training set, so a fallback value always exists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<FallbackStage>", into = "Vec<FallbackStage>")]
pub struct FallbackChain {
    stages: Vec<FallbackStage>,
}

impl FallbackChain {
    pub fn new(stages: Vec<FallbackStage>) -> Result<Self> {
        if stages.last() != Some(&FallbackStage::GlobalMean) {
            return Err(Error::Config(
                "fallback chain must end with global_mean".to_string(),
            ));
        }
        for (pos, stage) in stages.iter().enumerate() {
            if stages[..pos].contains(stage) {
                return Err(Error::Config(format!(
                    "fallback chain repeats stage {stage:?}"
                )));
            }
        }
        Ok(FallbackChain { stages })
    }

    pub fn stages(&self) -> &[FallbackStage] {
        &self.stages
    }
}

impl Default for FallbackChain {
    fn default() -> Self {
        FallbackChain {
            stages: vec![
                FallbackStage::ItemMean,
                FallbackStage::UserMean,
                FallbackStage::GlobalMean,
            ],
        }
    }
}

impl TryFrom<Vec<FallbackStage>> for FallbackChain {
    type Error = Error;

    fn try_from(stages: Vec<FallbackStage>) -> Result<Self> {
        FallbackChain::new(stages)
    }
}

impl From<FallbackChain> for Vec<FallbackStage> {
    fn from(chain: FallbackChain) -> Self {
        chain.stages
    }
}

/// Full predictor configuration. KNN fields are ignored by MF and vice
/// versa; `validate` checks only what the kind uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorConfig {
    pub kind: AlgorithmKind,
    /// k for UU/II.
    pub neighborhood_size: usize,
    /// f for MF.
    pub latent_factors: usize,
    pub learning_rate: f64,
    pub regularization: f64,
    pub iterations: usize,
    /// Factor components initialize uniform in (-init_scale, init_scale).
    pub init_scale: f64,
    pub seed: u64,
    pub fallback_chain: FallbackChain,
    pub clamp: bool,
    pub similarity: SimilarityOptions,
}

pub const DEFAULT_LEARNING_RATE: f64 = 0.07;
pub const DEFAULT_REGULARIZATION: f64 = 0.06;
pub const DEFAULT_ITERATIONS: usize = 100;
pub const DEFAULT_INIT_SCALE: f64 = 0.1;

impl PredictorConfig {
    fn base(kind: AlgorithmKind, similarity: SimilarityOptions) -> Self {
        PredictorConfig {
            kind,
            neighborhood_size: 80,
            latent_factors: 40,
            learning_rate: DEFAULT_LEARNING_RATE,
            regularization: DEFAULT_REGULARIZATION,
            iterations: DEFAULT_ITERATIONS,
            init_scale: DEFAULT_INIT_SCALE,
            seed: 0,
            fallback_chain: FallbackChain::default(),
            clamp: true,
            similarity,
        }
    }

    pub fn uu(k: usize) -> Self {
        PredictorConfig {
            neighborhood_size: k,
            ..Self::base(AlgorithmKind::Uu, SimilarityOptions::pearson())
        }
    }

    pub fn ii(k: usize) -> Self {
        PredictorConfig {
            neighborhood_size: k,
            ..Self::base(AlgorithmKind::Ii, SimilarityOptions::cosine())
        }
    }

    pub fn mf(f: usize) -> Self {
        PredictorConfig {
            latent_factors: f,
            ..Self::base(AlgorithmKind::Mf, SimilarityOptions::cosine())
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            AlgorithmKind::Uu | AlgorithmKind::Ii => {
                if self.neighborhood_size < 1 {
                    return Err(Error::Config("neighborhood_size must be >= 1".to_string()));
                }
            }
            AlgorithmKind::Mf => {
                if self.latent_factors < 1 {
                    return Err(Error::Config("latent_factors must be >= 1".to_string()));
                }
                if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
                    return Err(Error::Config("learning_rate must be > 0".to_string()));
                }
                if !(self.regularization >= 0.0) || !self.regularization.is_finite() {
                    return Err(Error::Config("regularization must be >= 0".to_string()));
                }
                if self.iterations < 1 {
                    return Err(Error::Config("iterations must be >= 1".to_string()));
                }
                if !(self.init_scale > 0.0) || !self.init_scale.is_finite() {
                    return Err(Error::Config("init_scale must be > 0".to_string()));
                }
            }
        }
        Ok(())
    }
}

/// A produced rating estimate with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub value: f64,
    /// True iff the model proper produced the value, false for fallbacks.
    pub served: bool,
    /// The chain stage that fired, `None` when served.
    pub fallback_level: Option<FallbackStage>,
}

pub(crate) fn apply_clamp(value: f64, clamp: bool) -> f64 {
    if clamp {
        value.clamp(1.0, 5.0)
    } else {
        value
    }
}

/// A fitted predictor bound to its training set, exposing the uniform
/// predict contract across the three algorithms.
pub enum Recommender<'a> {
    Uu {
        train: &'a Dataset,
        cfg: PredictorConfig,
    },
    Ii {
        train: &'a Dataset,
        cfg: PredictorConfig,
    },
    Mf {
        model: MFModel,
        cfg: PredictorConfig,
    },
}

impl<'a> Recommender<'a> {
    /// Validate the config and, for MF, train the model. Errors on an empty
    /// training set; afterwards `predict` is total.
    pub fn fit(train: &'a Dataset, cfg: PredictorConfig) -> Result<Self> {
        cfg.validate()?;
        if train.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        Ok(match cfg.kind {
            AlgorithmKind::Uu => Recommender::Uu { train, cfg },
            AlgorithmKind::Ii => Recommender::Ii { train, cfg },
            AlgorithmKind::Mf => {
                let model = mf_train(train, &cfg)?;
                Recommender::Mf { model, cfg }
            }
        })
    }

    pub fn kind(&self) -> AlgorithmKind {
        self.config().kind
    }

    pub fn config(&self) -> &PredictorConfig {
        match self {
            Recommender::Uu { cfg, .. }
            | Recommender::Ii { cfg, .. }
            | Recommender::Mf { cfg, .. } => cfg,
        }
    }

    pub fn predict(&self, user: &UserRef, item: &ItemRef) -> Prediction {
        match self {
            Recommender::Uu { train, cfg } => {
                uu_predict(train, user, item, cfg).expect("fit checked for non-empty train")
            }
            Recommender::Ii { train, cfg } => {
                ii_predict(train, user, item, cfg).expect("fit checked for non-empty train")
            }
            Recommender::Mf { model, cfg } => mf_predict(model, user, item, cfg),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_must_terminate_in_global_mean() {
        assert!(FallbackChain::new(vec![FallbackStage::ItemMean]).is_err());
        assert!(FallbackChain::new(vec![]).is_err());
        assert!(FallbackChain::new(vec![
            FallbackStage::UserMean,
            FallbackStage::GlobalMean
        ])
        .is_ok());
        assert!(FallbackChain::new(vec![FallbackStage::GlobalMean]).is_ok());
    }

    #[test]
    fn chain_rejects_repeats() {
        assert!(FallbackChain::new(vec![
            FallbackStage::ItemMean,
            FallbackStage::ItemMean,
            FallbackStage::GlobalMean
        ])
        .is_err());
    }

    #[test]
    fn config_validation_per_kind() {
        let mut cfg = PredictorConfig::uu(0);
        assert!(cfg.validate().is_err());
        cfg.neighborhood_size = 1;
        assert!(cfg.validate().is_ok());

        let mut cfg = PredictorConfig::mf(0);
        assert!(cfg.validate().is_err());
        cfg.latent_factors = 1;
        assert!(cfg.validate().is_ok());
        cfg.learning_rate = 0.0;
        assert!(cfg.validate().is_err());

        // A zero neighborhood size is irrelevant to MF.
        let mut cfg = PredictorConfig::mf(4);
        cfg.neighborhood_size = 0;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn chain_serde_round_trip_validates() {
        let chain = FallbackChain::default();
        let json = serde_json::to_string(&chain).unwrap();
        assert_eq!(json, r#"["item_mean","user_mean","global_mean"]"#);
        let back: FallbackChain = serde_json::from_str(&json).unwrap();
        assert_eq!(back, chain);
        assert!(serde_json::from_str::<FallbackChain>(r#"["item_mean"]"#).is_err());
    }
}
