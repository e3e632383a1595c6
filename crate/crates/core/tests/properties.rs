//! Randomized invariant checks. Each property states something that must
//! hold for every input, not just the fixtures the unit tests pin down:
//! partitions account for every rating, round trips lose nothing, kernels
//! stay symmetric and bounded, and the t-test behaves under exchange.

use std::collections::BTreeSet;

use proptest::prelude::*;

use crossrec_core::dataset::{
    filter_min_ratings, read_interchange, restrict_to_children, select_kplus_users, split,
    write_interchange, Dataset, DatasetBuilder, ItemMeta, ItemRef, Rating, RestrictMode, Source,
    UserRef,
};
use crossrec_core::evaluation::{coverage, rmse};
use crossrec_core::similarity::{
    cosine_item_idx, pearson_user_idx, SimilarityOptions,
};
use crossrec_core::stats::{paired_t_test, TTestOutcome};

/// Raw rating tuples: (user, item, value, source tag). Duplicated pairs are
/// dropped keep-first at build time, mirroring ingestion.
fn entries() -> impl Strategy<Value = Vec<(u8, u8, u8, u8)>> {
    prop::collection::vec((0u8..7, 0u8..7, 1u8..=5, 0u8..3), 1..60)
}

fn build(entries: &[(u8, u8, u8, u8)]) -> Dataset {
    let mut b = DatasetBuilder::new();
    for &(u, i, v, s) in entries {
        let source = [Source::Adult, Source::Child, Source::Synth][s as usize];
        b.push_keep_first(Rating::new(
            UserRef::new(format!("u{u}")),
            ItemRef::new(format!("i{i}")),
            v as f64,
            source,
        ))
        .unwrap();
    }
    b.build()
}

/// A dataset where every even-numbered item carries the children's genre.
fn build_with_meta(entries: &[(u8, u8, u8, u8)]) -> Dataset {
    let mut b = DatasetBuilder::new();
    for i in 0u8..7 {
        let genres: BTreeSet<String> = if i % 2 == 0 {
            ["Children's".to_string()].into()
        } else {
            ["Drama".to_string()].into()
        };
        b.add_item_meta(ItemMeta::new(
            ItemRef::new(format!("i{i}")),
            format!("title {i}"),
            Some(2000),
            genres,
        ));
    }
    for &(u, i, v, s) in entries {
        let source = [Source::Adult, Source::Child, Source::Synth][s as usize];
        b.push_keep_first(Rating::new(
            UserRef::new(format!("u{u}")),
            ItemRef::new(format!("i{i}")),
            v as f64,
            source,
        ))
        .unwrap();
    }
    b.build()
}

type Key = (String, String, u64, Source);

fn key(r: &Rating) -> Key {
    (
        r.user.as_str().to_string(),
        r.item.as_str().to_string(),
        r.value.to_bits(),
        r.source,
    )
}

proptest! {
    #[test]
    fn split_partitions_every_rating(
        entries in entries(),
        frac in 0.05f64..0.95,
        seed in any::<u64>(),
    ) {
        let ds = build(&entries);
        let (train, test) = split(&ds, frac, seed).unwrap();
        prop_assert_eq!(train.rating_count() + test.rating_count(), ds.rating_count());
        let want_train = (frac * ds.rating_count() as f64 + 0.5).floor() as usize;
        prop_assert_eq!(train.rating_count(), want_train);

        let mut remaining: BTreeSet<Key> = ds.ratings().map(|r| key(&r)).collect();
        prop_assert_eq!(remaining.len(), ds.rating_count());
        for r in train.ratings().chain(test.ratings()) {
            prop_assert!(remaining.remove(&key(&r)), "rating outside the source set");
        }
        prop_assert!(remaining.is_empty());
    }

    #[test]
    fn split_is_deterministic_per_seed(
        entries in entries(),
        frac in 0.1f64..0.9,
        seed in any::<u64>(),
    ) {
        let ds = build(&entries);
        let (t1, e1) = split(&ds, frac, seed).unwrap();
        let (t2, e2) = split(&ds, frac, seed).unwrap();
        let keys = |d: &Dataset| d.ratings().map(|r| key(&r)).collect::<Vec<_>>();
        prop_assert_eq!(keys(&t1), keys(&t2));
        prop_assert_eq!(keys(&e1), keys(&e2));
    }

    #[test]
    fn filter_is_monotone_and_idempotent(
        entries in entries(),
        k in 0usize..6,
        extra in 0usize..4,
    ) {
        let ds = build(&entries);
        let loose = filter_min_ratings(&ds, k);
        let strict = filter_min_ratings(&ds, k + extra);

        let users = |d: &Dataset| d.users().iter().cloned().collect::<BTreeSet<_>>();
        prop_assert!(users(&strict).is_subset(&users(&loose)));

        for u in loose.users() {
            let original = ds.user_index(u).unwrap();
            prop_assert!(ds.ratings_by_user(original).len() >= k);
        }
        // Filtering keeps whole users, so applying the same threshold again
        // removes nothing.
        let again = filter_min_ratings(&loose, k);
        prop_assert_eq!(again.rating_count(), loose.rating_count());
        prop_assert_eq!(users(&again), users(&loose));
    }

    #[test]
    fn interchange_round_trips_exactly(entries in entries()) {
        let ds = build(&entries);
        let mut buf = Vec::new();
        write_interchange(&ds, &mut buf).unwrap();
        let back = read_interchange(buf.as_slice()).unwrap();
        prop_assert_eq!(back.users(), ds.users());
        prop_assert_eq!(back.items(), ds.items());
        let keys = |d: &Dataset| d.ratings().map(|r| key(&r)).collect::<Vec<_>>();
        prop_assert_eq!(keys(&back), keys(&ds));
    }

    #[test]
    fn rmse_is_symmetric_and_permutation_invariant(
        pairs in prop::collection::vec((0.0f64..6.0, 0.0f64..6.0), 1..40),
        seed in any::<u64>(),
    ) {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;

        let (a, b): (Vec<f64>, Vec<f64>) = pairs.iter().cloned().unzip();
        let forward = rmse(&a, &b).unwrap();
        prop_assert!(forward >= 0.0);
        prop_assert_eq!(forward, rmse(&b, &a).unwrap());
        prop_assert_eq!(rmse(&a, &a).unwrap(), 0.0);

        let mut order: Vec<usize> = (0..a.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let pa: Vec<f64> = order.iter().map(|&x| a[x]).collect();
        let pb: Vec<f64> = order.iter().map(|&x| b[x]).collect();
        prop_assert!((rmse(&pa, &pb).unwrap() - forward).abs() <= 1e-12);
    }

    #[test]
    fn similarities_are_symmetric_and_bounded(entries in entries()) {
        let ds = build(&entries);
        let cos = SimilarityOptions::cosine();
        for i in 0..ds.item_count() as u32 {
            for j in 0..ds.item_count() as u32 {
                let ab = cosine_item_idx(&ds, i, j, &cos);
                let ba = cosine_item_idx(&ds, j, i, &cos);
                prop_assert_eq!(ab, ba);
                if let Some(s) = ab {
                    // Ratings are positive, so cosine cannot go negative.
                    prop_assert!((0.0..=1.0).contains(&s));
                }
            }
        }
        let pea = SimilarityOptions::pearson();
        for u in 0..ds.user_count() as u32 {
            for v in 0..ds.user_count() as u32 {
                let ab = pearson_user_idx(&ds, u, v, &pea);
                let ba = pearson_user_idx(&ds, v, u, &pea);
                prop_assert_eq!(ab, ba);
                if let Some(s) = ab {
                    prop_assert!(s.abs() <= 1.0);
                }
            }
        }
    }

    #[test]
    fn pearson_is_invariant_under_positive_affine_maps(
        xs in prop::collection::vec(1u8..=3, 2..12),
        ys in prop::collection::vec(1u8..=3, 2..12),
        scale in prop::sample::select(vec![1.0f64, 1.25, 1.5]),
        shift in prop::sample::select(vec![0.0f64, 0.25, 0.5]),
    ) {
        let n = xs.len().min(ys.len());
        let pair_sets = |transform: bool| {
            let mut b = DatasetBuilder::new();
            for t in 0..n {
                let x = if transform {
                    scale * xs[t] as f64 + shift
                } else {
                    xs[t] as f64
                };
                b.push(Rating::new(UserRef::new("x"), ItemRef::new(format!("i{t}")), x, Source::Synth)).unwrap();
                b.push(Rating::new(UserRef::new("y"), ItemRef::new(format!("i{t}")), ys[t] as f64, Source::Synth)).unwrap();
            }
            b.build()
        };
        let plain = pair_sets(false);
        let mapped = pair_sets(true);
        let opts = SimilarityOptions::pearson();
        let s1 = pearson_user_idx(&plain, 0, 1, &opts);
        let s2 = pearson_user_idx(&mapped, 0, 1, &opts);
        match (s1, s2) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}"),
            (None, None) => {}
            other => prop_assert!(false, "definedness changed under affine map: {:?}", other),
        }
    }

    #[test]
    fn t_test_p_stays_in_unit_interval_and_swaps_cleanly(
        pairs in prop::collection::vec((0.0f64..4.0, 0.0f64..4.0), 2..40),
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.iter().cloned().unzip();
        match paired_t_test(&a, &b).unwrap() {
            TTestOutcome::Defined { t, p, df, mean_diff, .. } => {
                prop_assert!(t.is_finite());
                prop_assert!(p > 0.0 && p <= 1.0, "p = {}", p);
                prop_assert_eq!(df, a.len() - 1);
                match paired_t_test(&b, &a).unwrap() {
                    TTestOutcome::Defined { t: t2, p: p2, mean_diff: m2, .. } => {
                        prop_assert_eq!(t2, -t);
                        prop_assert_eq!(p2, p);
                        prop_assert_eq!(m2, -mean_diff);
                    }
                    other => prop_assert!(false, "swap changed the outcome: {:?}", other),
                }
            }
            TTestOutcome::ZeroVariance { mean_diff } => {
                prop_assert!(mean_diff != 0.0);
            }
        }
    }

    #[test]
    fn coverage_fractions_stay_in_bounds(
        pairs in prop::collection::vec((0u8..6, any::<bool>()), 0..40),
    ) {
        let (user_frac, pair_frac) = coverage(pairs.iter().cloned());
        prop_assert!((0.0..=1.0).contains(&user_frac));
        prop_assert!((0.0..=1.0).contains(&pair_frac));
        if pairs.is_empty() {
            prop_assert_eq!((user_frac, pair_frac), (0.0, 0.0));
        }
        if !pairs.is_empty() && pairs.iter().all(|&(_, s)| s) {
            prop_assert_eq!((user_frac, pair_frac), (1.0, 1.0));
        }
        if pairs.iter().any(|&(_, s)| s) {
            prop_assert!(user_frac > 0.0 && pair_frac > 0.0);
        }
    }

    #[test]
    fn kplus_selection_matches_a_direct_count(
        entries in entries(),
        min_children in 0usize..5,
    ) {
        let ds = build_with_meta(&entries);
        let selected = select_kplus_users(&ds, min_children);

        for u in ds.users() {
            let idx = ds.user_index(u).unwrap();
            let child_ratings = ds
                .ratings_by_user(idx)
                .iter()
                .filter(|&&(i, _)| ds.is_children_item(i))
                .count();
            prop_assert_eq!(selected.contains(u), child_ratings >= min_children);
        }

        // Restricting to the selection keeps exactly the selected users'
        // children's-item ratings.
        let restricted = restrict_to_children(&ds, &selected, RestrictMode::ChildrenOnly);
        for r in restricted.ratings() {
            prop_assert!(selected.contains(&r.user));
            let item = ds.item_index(&r.item).unwrap();
            prop_assert!(ds.is_children_item(item));
        }
        let want: usize = ds
            .ratings()
            .filter(|r| {
                selected.contains(&r.user)
                    && ds.is_children_item(ds.item_index(&r.item).unwrap())
            })
            .count();
        prop_assert_eq!(restricted.rating_count(), want);
    }
}
