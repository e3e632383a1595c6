//! Loader for the MovieLens-1M native file format.
//!
//! Ratings come as `UserID::MovieID::Rating::Timestamp`, movies as
//! `MovieID::Title (Year)::Genre1|Genre2|...`, both ISO-8859-1 encoded as
//! distributed by GroupLens. Timestamps are parsed for format validation and
//! then discarded.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::dataset::{Dataset, DatasetBuilder, ItemMeta, ItemRef, PushError, Rating, Source, UserRef};
use crate::error::{Error, Result};

const NAMESPACE: &str = "ml1m";

/// Decode ISO-8859-1 bytes; every byte maps to the code point of equal value.
fn latin1(bytes: &[u8]) -> String {
    bytes.iter().map(|&b| b as char).collect()
}

fn ingest_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Ingest {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Split `Title (Year)` into the bare title and the year, tolerating titles
/// with interior parentheses by taking the trailing group only.
fn split_title_year(raw: &str) -> (String, Option<i32>) {
    let trimmed = raw.trim();
    if let Some(open) = trimmed.rfind('(') {
        let tail = &trimmed[open..];
        if tail.len() == 6 && tail.ends_with(')') {
            if let Ok(year) = tail[1..5].parse::<i32>() {
                return (trimmed[..open].trim().to_string(), Some(year));
            }
        }
    }
    (trimmed.to_string(), None)
}

/// Load a MovieLens-1M release from its native `ratings.dat`/`movies.dat`
/// pair. Users and items are namespaced `ml1m:` and tagged [`Source::Adult`].
pub fn load_ml1m(ratings_path: &Path, movies_path: &Path) -> Result<Dataset> {
    let mut builder = DatasetBuilder::new();

    let movie_bytes = fs::read(movies_path)?;
    for (lineno, line) in latin1(&movie_bytes).lines().enumerate() {
        let lineno = lineno + 1;
        if line.is_empty() {
            continue;
        }
        let (id_part, rest) = line
            .split_once("::")
            .ok_or_else(|| ingest_err(movies_path, lineno, "expected MovieID::Title::Genres"))?;
        let (title_part, genre_part) = rest
            .rsplit_once("::")
            .ok_or_else(|| ingest_err(movies_path, lineno, "expected MovieID::Title::Genres"))?;
        id_part
            .parse::<u64>()
            .map_err(|_| ingest_err(movies_path, lineno, format!("bad movie id {id_part:?}")))?;

        let (title, year) = split_title_year(title_part);
        let genres: BTreeSet<String> = genre_part
            .split('|')
            .filter(|g| !g.is_empty())
            .map(|g| g.trim().to_string())
            .collect();
        builder.add_item_meta(ItemMeta::new(
            ItemRef::namespaced(NAMESPACE, id_part),
            title,
            year,
            genres,
        ));
    }

    let rating_bytes = fs::read(ratings_path)?;
    for (lineno, line) in latin1(&rating_bytes).lines().enumerate() {
        let lineno = lineno + 1;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split("::");
        let (user, movie, value, timestamp) = match (
            fields.next(),
            fields.next(),
            fields.next(),
            fields.next(),
            fields.next(),
        ) {
            (Some(u), Some(m), Some(v), Some(t), None) => (u, m, v, t),
            _ => {
                return Err(ingest_err(
                    ratings_path,
                    lineno,
                    "expected UserID::MovieID::Rating::Timestamp",
                ))
            }
        };

        user.parse::<u64>()
            .map_err(|_| ingest_err(ratings_path, lineno, format!("bad user id {user:?}")))?;
        movie
            .parse::<u64>()
            .map_err(|_| ingest_err(ratings_path, lineno, format!("bad movie id {movie:?}")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| ingest_err(ratings_path, lineno, format!("bad rating {value:?}")))?;
        // Validated, then discarded: no model here uses time information.
        timestamp
            .parse::<i64>()
            .map_err(|_| ingest_err(ratings_path, lineno, format!("bad timestamp {timestamp:?}")))?;

        let rating = Rating::new(
            UserRef::namespaced(NAMESPACE, user),
            ItemRef::namespaced(NAMESPACE, movie),
            value,
            Source::Adult,
        );
        match builder.push(rating) {
            Ok(()) => {}
            Err(PushError::OutOfRange) => {
                return Err(ingest_err(
                    ratings_path,
                    lineno,
                    format!("rating {value} outside [1, 5]"),
                ))
            }
            Err(PushError::Duplicate) => {
                return Err(Error::DuplicateRating {
                    path: ratings_path.display().to_string(),
                    line: lineno,
                    user: format!("{NAMESPACE}:{user}"),
                    item: format!("{NAMESPACE}:{movie}"),
                })
            }
        }
    }

    Ok(builder.build())
}
