//! Bundled experiment specs covering the three experiment families:
//! baselines on ML1M and the synthetic child corpus, the full merge of
//! adult data into child training, and the K+ merges (CHILDREN_ONLY
//! default plus the ALL_RATINGS variant). The merge presets share their
//! child recipe, so at equal seed they evaluate on the identical test
//! half and can be compared directly.

use crate::error::{Error, Result};
use crate::harness::spec::ExperimentSpec;

const PRESETS: &[(&str, &str)] = &[
    ("ml1m", include_str!("../../presets/ml1m.toml")),
    ("child-2", include_str!("../../presets/child-2.toml")),
    ("child-10", include_str!("../../presets/child-10.toml")),
    ("child-20", include_str!("../../presets/child-20.toml")),
    ("child-base", include_str!("../../presets/child-base.toml")),
    ("full-merge", include_str!("../../presets/full-merge.toml")),
    ("kplus-10", include_str!("../../presets/kplus-10.toml")),
    ("kplus-10-all", include_str!("../../presets/kplus-10-all.toml")),
];

/// Names of the bundled presets, in listing order.
pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(name, _)| *name).collect()
}

/// Raw TOML text of a bundled preset.
pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

/// Parse a bundled preset into a validated spec.
pub fn preset(name: &str) -> Result<ExperimentSpec> {
    match preset_text(name) {
        Some(text) => ExperimentSpec::from_toml(text),
        None => Err(Error::Config(format!(
            "unknown preset '{name}' (available: {})",
            preset_names().join(", ")
        ))),
    }
}
