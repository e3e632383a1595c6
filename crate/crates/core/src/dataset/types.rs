//! Domain identifiers and record types shared across the crate.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Genre label that marks an item as a children's title in MovieLens metadata.
pub const CHILDRENS_GENRE: &str = "Children's";

/// Provenance of a rating observation: which kind of dataset it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Source {
    Adult,
    Child,
    Synth,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Adult => "ADULT",
            Source::Child => "CHILD",
            Source::Synth => "SYNTH",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "ADULT" => Ok(Source::Adult),
            "CHILD" => Ok(Source::Child),
            "SYNTH" => Ok(Source::Synth),
            other => Err(Error::Config(format!("unknown source tag {other:?}"))),
        }
    }
}

/// Opaque user identifier. Loaders namespace ids by dataset (`ml1m:42`),
/// which keeps user spaces disjoint when datasets are merged.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserRef(pub String);

impl UserRef {
    pub fn new(id: impl Into<String>) -> Self {
        UserRef(id.into())
    }

    pub fn namespaced(namespace: &str, id: impl fmt::Display) -> Self {
        UserRef(format!("{namespace}:{id}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for UserRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Opaque item identifier, namespaced like [`UserRef`]. Two datasets share an
/// item only when their refs are equal or a merge unifies them by title/year.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemRef(pub String);

impl ItemRef {
    pub fn new(id: impl Into<String>) -> Self {
        ItemRef(id.into())
    }

    pub fn namespaced(namespace: &str, id: impl fmt::Display) -> Self {
        ItemRef(format!("{namespace}:{id}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ItemRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One (user, item, value) observation with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub user: UserRef,
    pub item: ItemRef,
    pub value: f64,
    pub source: Source,
}

impl Rating {
    pub fn new(user: UserRef, item: ItemRef, value: f64, source: Source) -> Self {
        Rating {
            user,
            item,
            value,
            source,
        }
    }
}

/// Item metadata with the derived children's-item flag.
///
/// `is_children` is true iff the genre set contains [`CHILDRENS_GENRE`], the
/// only child-related signal in MovieLens metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemMeta {
    pub item: ItemRef,
    pub title: String,
    pub year: Option<i32>,
    pub genres: BTreeSet<String>,
    pub is_children: bool,
}

impl ItemMeta {
    pub fn new(
        item: ItemRef,
        title: impl Into<String>,
        year: Option<i32>,
        genres: BTreeSet<String>,
    ) -> Self {
        let is_children = genres.contains(CHILDRENS_GENRE);
        ItemMeta {
            item,
            title: title.into(),
            year,
            genres,
            is_children,
        }
    }
}
