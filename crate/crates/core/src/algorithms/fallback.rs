//! Mean-statistic fallbacks for pairs the model proper cannot serve.

use crate::algorithms::{apply_clamp, FallbackChain, FallbackStage, Prediction, PredictorConfig};
use crate::dataset::{Dataset, ItemRef, UserRef};
use crate::error::{Error, Result};

/// Walk the chain by train-set indices (`None` marks an unknown entity) and
/// return the first defined statistic with the stage that produced it. Every
/// indexed user and item has at least one training rating, so their means
/// are always defined.
pub fn fallback_idx(
    train: &Dataset,
    user: Option<u32>,
    item: Option<u32>,
    chain: &FallbackChain,
) -> Result<(f64, FallbackStage)> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    for &stage in chain.stages() {
        match stage {
            FallbackStage::ItemMean => {
                if let Some(i) = item {
                    return Ok((train.item_mean(i), stage));
                }
            }
            FallbackStage::UserMean => {
                if let Some(u) = user {
                    return Ok((train.user_mean(u), stage));
                }
            }
            FallbackStage::GlobalMean => {
                let mean = train.global_mean().expect("train checked non-empty");
                return Ok((mean, stage));
            }
        }
    }
    unreachable!("chain invariant guarantees a terminal global_mean stage")
}

/// Ref-level fallback. Unknown refs are expected here; they simply skip the
/// stages that need them.
pub fn fallback(
    train: &Dataset,
    user: &UserRef,
    item: &ItemRef,
    chain: &FallbackChain,
) -> Result<(f64, FallbackStage)> {
    fallback_idx(train, train.user_index(user), train.item_index(item), chain)
}

/// Package a fallback value as an unserved [`Prediction`] under the
/// predictor's clamp setting.
pub(crate) fn fallback_prediction(
    train: &Dataset,
    user: Option<u32>,
    item: Option<u32>,
    cfg: &PredictorConfig,
) -> Result<Prediction> {
    let (value, stage) = fallback_idx(train, user, item, &cfg.fallback_chain)?;
    Ok(Prediction {
        value: apply_clamp(value, cfg.clamp),
        served: false,
        fallback_level: Some(stage),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DatasetBuilder, Rating, Source};

    fn sample() -> Dataset {
        let mut b = DatasetBuilder::new();
        for (u, i, v) in [("u1", "i1", 3.0), ("u2", "i1", 5.0), ("u1", "i2", 2.0), ("u1", "i3", 4.0)] {
            b.push(Rating::new(
                UserRef::new(u),
                ItemRef::new(i),
                v,
                Source::Synth,
            ))
            .unwrap();
        }
        b.build()
    }

    #[test]
    fn item_mean_fires_first() {
        let ds = sample();
        let (v, stage) = fallback(&ds, &UserRef::new("ghost"), &ItemRef::new("i1"), &FallbackChain::default()).unwrap();
        assert_eq!(v, 4.0);
        assert_eq!(stage, FallbackStage::ItemMean);
    }

    #[test]
    fn user_mean_when_item_unseen() {
        let ds = sample();
        let (v, stage) = fallback(&ds, &UserRef::new("u1"), &ItemRef::new("ghost"), &FallbackChain::default()).unwrap();
        assert_eq!(v, 3.0);
        assert_eq!(stage, FallbackStage::UserMean);
    }

    #[test]
    fn global_mean_when_both_unseen() {
        let ds = sample();
        let (v, stage) = fallback(&ds, &UserRef::new("ghost"), &ItemRef::new("ghost"), &FallbackChain::default()).unwrap();
        assert_eq!(v, 3.5);
        assert_eq!(stage, FallbackStage::GlobalMean);
    }

    #[test]
    fn empty_train_is_an_error() {
        let ds = Dataset::empty();
        let err = fallback(&ds, &UserRef::new("u"), &ItemRef::new("i"), &FallbackChain::default());
        assert!(matches!(err, Err(Error::EmptyTrainingSet)));
    }

    #[test]
    fn shorter_chain_skips_stages() {
        let ds = sample();
        let chain = FallbackChain::new(vec![FallbackStage::GlobalMean]).unwrap();
        let (v, stage) = fallback(&ds, &UserRef::new("u1"), &ItemRef::new("i1"), &chain).unwrap();
        assert_eq!(v, 3.5);
        assert_eq!(stage, FallbackStage::GlobalMean);
    }
}
