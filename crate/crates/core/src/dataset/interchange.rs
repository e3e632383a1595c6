//! Canonical interchange format.
//!
//! Ratings: UTF-8 comma-separated with header `user,item,value,source`.
//! Item metadata travels in a sidecar table with header
//! `item,title,year,genres,is_children` (genres pipe-joined).

use std::io::{Read, Write};

use crate::dataset::{Dataset, DatasetBuilder, ItemMeta, ItemRef, PushError, Rating, Source, UserRef};
use crate::error::{Error, Result};

pub const RATINGS_HEADER: [&str; 4] = ["user", "item", "value", "source"];

/// Write ratings in insertion order. Output is byte-deterministic for a
/// given dataset.
pub fn write_interchange<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RATINGS_HEADER)?;
    for r in ds.records() {
        w.write_record([
            ds.user_ref(r.user).as_str(),
            ds.item_ref(r.item).as_str(),
            &format_value(r.value),
            r.source.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn format_value(v: f64) -> String {
    // Shortest round-trip form: "4" for whole stars, "3.5" for half stars.
    if v == v.trunc() {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

pub fn read_interchange<R: Read>(reader: R) -> Result<Dataset> {
    read_interchange_with_meta(reader, Vec::new())
}

/// Read the ratings table, attaching the supplied item metadata to items
/// that appear in it.
pub fn read_interchange_with_meta<R: Read>(reader: R, metas: Vec<ItemMeta>) -> Result<Dataset> {
    let mut csv_reader = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    {
        let headers = csv_reader.headers()?;
        if headers != &csv::StringRecord::from(RATINGS_HEADER.to_vec()) {
            return Err(Error::Ingest {
                path: "<interchange>".into(),
                line: 1,
                message: format!("expected header user,item,value,source, got {headers:?}"),
            });
        }
    }

    let mut builder = DatasetBuilder::new();
    for meta in metas {
        builder.add_item_meta(meta);
    }

    for (i, record) in csv_reader.records().enumerate() {
        let line = i + 2;
        let record = record?;
        if record.len() != 4 {
            return Err(Error::Ingest {
                path: "<interchange>".into(),
                line,
                message: format!("expected 4 fields, got {}", record.len()),
            });
        }
        let value: f64 = record[2].parse().map_err(|_| Error::Ingest {
            path: "<interchange>".into(),
            line,
            message: format!("bad value {:?}", &record[2]),
        })?;
        let source: Source = record[3].parse().map_err(|_| Error::Ingest {
            path: "<interchange>".into(),
            line,
            message: format!("bad source {:?}", &record[3]),
        })?;
        let rating = Rating::new(
            UserRef::new(&record[0]),
            ItemRef::new(&record[1]),
            value,
            source,
        );
        match builder.push(rating) {
            Ok(()) => {}
            Err(PushError::OutOfRange) => {
                return Err(Error::Ingest {
                    path: "<interchange>".into(),
                    line,
                    message: format!("rating {value} outside [1, 5]"),
                })
            }
            Err(PushError::Duplicate) => {
                return Err(Error::Ingest {
                    path: "<interchange>".into(),
                    line,
                    message: format!("duplicate (user, item) pair ({}, {})", &record[0], &record[1]),
                })
            }
        }
    }

    Ok(builder.build())
}

pub const ITEMS_HEADER: [&str; 5] = ["item", "title", "year", "genres", "is_children"];

pub fn write_item_meta<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(ITEMS_HEADER)?;
    for meta in ds.item_metas() {
        let genres = meta.genres.iter().cloned().collect::<Vec<_>>().join("|");
        w.write_record([
            meta.item.as_str(),
            &meta.title,
            &meta.year.map(|y| y.to_string()).unwrap_or_default(),
            &genres,
            if meta.is_children { "true" } else { "false" },
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_item_meta<R: Read>(reader: R) -> Result<Vec<ItemMeta>> {
    let mut csv_reader = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut out = Vec::new();
    for (i, record) in csv_reader.records().enumerate() {
        let line = i + 2;
        let record = record?;
        if record.len() != 5 {
            return Err(Error::Ingest {
                path: "<items>".into(),
                line,
                message: format!("expected 5 fields, got {}", record.len()),
            });
        }
        let year = if record[2].is_empty() {
            None
        } else {
            Some(record[2].parse::<i32>().map_err(|_| Error::Ingest {
                path: "<items>".into(),
                line,
                message: format!("bad year {:?}", &record[2]),
            })?)
        };
        let genres = record[3]
            .split('|')
            .filter(|g| !g.is_empty())
            .map(|g| g.to_string())
            .collect();
        // is_children is re-derived from the genre set, keeping the stored
        // flag a convenience column rather than an independent source.
        out.push(ItemMeta::new(
            ItemRef::new(&record[0]),
            record[1].to_string(),
            year,
            genres,
        ));
    }
    Ok(out)
}
