//! Recipe execution: applies the dataset operations of a spec in
//! declaration order and checks that no step leaves a dataset empty.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use crate::dataset::{
    filter_min_ratings, generate_synthetic, load_ml1m, merge, read_interchange,
    read_interchange_with_meta, read_item_meta, restrict_to_children, select_kplus_users, split,
    Dataset,
};
use crate::error::{Error, Result};
use crate::harness::spec::{ExperimentSpec, Step, DATA_DIR_ENV};

/// Data directory from the environment, if set.
pub fn data_dir_from_env() -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_ENV).map(PathBuf::from)
}

fn resolve(data_dir: Option<&Path>, rel: &str) -> Result<PathBuf> {
    let p = Path::new(rel);
    if p.is_absolute() {
        return Ok(p.to_path_buf());
    }
    match data_dir {
        Some(d) => Ok(d.join(p)),
        None => Err(Error::Config(format!(
            "relative data path '{rel}' requires the {DATA_DIR_ENV} environment variable"
        ))),
    }
}

fn ensure_non_empty(ds: &Dataset, step: &str, what: &str) -> Result<()> {
    if ds.is_empty() {
        return Err(Error::EmptyAfterStep {
            step: step.to_string(),
            what: what.to_string(),
        });
    }
    Ok(())
}

/// Execute the recipe, returning every declared dataset by id. Validates
/// the spec first, so reference mistakes surface before any data is
/// touched. Randomized steps derive their seeds from the spec seed.
pub fn materialize(
    spec: &ExperimentSpec,
    data_dir: Option<&Path>,
) -> Result<BTreeMap<String, Dataset>> {
    spec.validate()?;
    let mut out: BTreeMap<String, Dataset> = BTreeMap::new();

    for step in &spec.steps {
        let label = step.label();
        match step {
            Step::LoadMl1m { id, ratings, movies } => {
                let ds = load_ml1m(
                    &resolve(data_dir, ratings)?,
                    &resolve(data_dir, movies)?,
                )?;
                ensure_non_empty(&ds, &label, "rating")?;
                out.insert(id.clone(), ds);
            }
            Step::Load { id, ratings, items } => {
                let ratings_file = File::open(resolve(data_dir, ratings)?)?;
                let ds = match items {
                    Some(items) => {
                        let metas = read_item_meta(File::open(resolve(data_dir, items)?)?)?;
                        read_interchange_with_meta(ratings_file, metas)?
                    }
                    None => read_interchange(ratings_file)?,
                };
                ensure_non_empty(&ds, &label, "rating")?;
                out.insert(id.clone(), ds);
            }
            Step::Generate { id, params } => {
                let mut params = params.clone();
                params.seed = params.seed.wrapping_add(spec.seed);
                let ds = generate_synthetic(&params)?;
                ensure_non_empty(&ds, &label, "rating")?;
                out.insert(id.clone(), ds);
            }
            Step::FilterMinRatings { id, input, min_ratings } => {
                let ds = filter_min_ratings(&out[input], *min_ratings);
                ensure_non_empty(&ds, &label, "rating")?;
                out.insert(id.clone(), ds);
            }
            Step::Split {
                input,
                train,
                test,
                train_fraction,
                seed_offset,
            } => {
                let (tr, te) = split(
                    &out[input],
                    *train_fraction,
                    spec.seed.wrapping_add(*seed_offset),
                )?;
                ensure_non_empty(&tr, &label, "train")?;
                ensure_non_empty(&te, &label, "test")?;
                out.insert(train.clone(), tr);
                out.insert(test.clone(), te);
            }
            Step::Merge { id, left, right, matching } => {
                let outcome = merge(&out[left], &out[right], *matching);
                ensure_non_empty(&outcome.dataset, &label, "rating")?;
                out.insert(id.clone(), outcome.dataset);
            }
            Step::Kplus { id, input, min_children, mode } => {
                let source = &out[input];
                let users = select_kplus_users(source, *min_children);
                let ds = restrict_to_children(source, &users, *mode);
                ensure_non_empty(&ds, &label, "rating")?;
                out.insert(id.clone(), ds);
            }
        }
    }
    Ok(out)
}
