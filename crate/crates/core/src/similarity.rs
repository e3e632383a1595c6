//! Item-item cosine and user-user Pearson kernels over sparse rating data,
//! plus deterministic top-k neighborhood selection.
//!
//! Both kernels operate on co-rated support: the set of users who rated both
//! items (cosine) or items rated by both users (Pearson). A similarity is
//! `None` (undefined) when the overlap is below the configured minimum or the
//! denominator degenerates; undefined entries never enter a neighborhood.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, ItemRef, UserRef};
use crate::error::{Error, Result};

pub const DEFAULT_COSINE_MIN_OVERLAP: usize = 1;
/// Pearson needs two points for a variance, so its floor is higher.
pub const DEFAULT_PEARSON_MIN_OVERLAP: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityKind {
    ItemCosine,
    UserPearson,
}

/// Kernel switches. The defaults are the declared baseline: co-rated norms,
/// negative similarities retained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityOptions {
    pub min_overlap: usize,
    /// Cosine only: use whole-vector norms in the denominator instead of
    /// norms over the co-rated support.
    pub full_vector_norms: bool,
    /// Drop non-positive similarities during neighborhood selection.
    pub positive_only: bool,
}

impl SimilarityOptions {
    pub fn cosine() -> Self {
        SimilarityOptions {
            min_overlap: DEFAULT_COSINE_MIN_OVERLAP,
            full_vector_norms: false,
            positive_only: false,
        }
    }

    pub fn pearson() -> Self {
        SimilarityOptions {
            min_overlap: DEFAULT_PEARSON_MIN_OVERLAP,
            full_vector_norms: false,
            positive_only: false,
        }
    }

    pub fn for_kind(kind: SimilarityKind) -> Self {
        match kind {
            SimilarityKind::ItemCosine => Self::cosine(),
            SimilarityKind::UserPearson => Self::pearson(),
        }
    }
}

/// Overlap accumulator from one merge-join pass over two sorted adjacency
/// rows: count and the five running sums needed by both kernels. Batch
/// evaluators fill the same struct incrementally; routing every caller
/// through [`cosine_from_sums`] and [`pearson_from_sums`] keeps lazy and
/// batched similarities bitwise identical.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CoratedSums {
    pub(crate) n: usize,
    pub(crate) sx: f64,
    pub(crate) sy: f64,
    pub(crate) sxy: f64,
    pub(crate) sx2: f64,
    pub(crate) sy2: f64,
}

fn corated_sums(a: &[(u32, f64)], b: &[(u32, f64)]) -> CoratedSums {
    let mut out = CoratedSums {
        n: 0,
        sx: 0.0,
        sy: 0.0,
        sxy: 0.0,
        sx2: 0.0,
        sy2: 0.0,
    };
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let (ka, x) = a[i];
        let (kb, y) = b[j];
        if ka == kb {
            out.n += 1;
            out.sx += x;
            out.sy += y;
            out.sxy += x * y;
            out.sx2 += x * x;
            out.sy2 += y * y;
            i += 1;
            j += 1;
        } else if ka < kb {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

pub(crate) fn sum_squares(row: &[(u32, f64)]) -> f64 {
    row.iter().map(|&(_, v)| v * v).sum()
}

/// Both kernels are mathematically confined to [-1, 1]. Finite arithmetic can
/// land a few ulps outside, or just inside, when the true value is exactly
/// +/-1 (perfectly aligned vectors with awkward sums). Snap that residue so
/// perfect similarity compares equal regardless of accumulation order; for
/// ratings on a discrete scale, genuinely imperfect similarities sit far
/// above this threshold away from the unit.
fn snap_unit(r: f64) -> f64 {
    if r.abs() >= 1.0 - 1e-14 {
        return r.signum();
    }
    r
}

/// Cosine from accumulated sums. `nx2`/`ny2` are the squared norms to use in
/// the denominator; with co-rated support they equal `s.sx2`/`s.sy2`.
pub(crate) fn cosine_from_sums(
    s: &CoratedSums,
    nx2: f64,
    ny2: f64,
    min_overlap: usize,
) -> Option<f64> {
    if s.n < min_overlap.max(1) {
        return None;
    }
    let denom = nx2.sqrt() * ny2.sqrt();
    if denom <= 0.0 {
        return None;
    }
    Some(snap_unit(s.sxy / denom))
}

/// Pearson from accumulated sums, centering on the co-rated subset.
pub(crate) fn pearson_from_sums(s: &CoratedSums, min_overlap: usize) -> Option<f64> {
    if s.n < min_overlap.max(2) {
        return None;
    }
    let n = s.n as f64;
    let cov = s.sxy - s.sx * s.sy / n;
    let var_x = s.sx2 - s.sx * s.sx / n;
    let var_y = s.sy2 - s.sy * s.sy / n;
    // Rating values live on [1, 5]; any genuine spread dwarfs this guard, so
    // it only catches constant vectors plus rounding residue.
    if var_x <= 1e-12 || var_y <= 1e-12 {
        return None;
    }
    Some(snap_unit(cov / (var_x.sqrt() * var_y.sqrt())))
}

/// Cosine between two items' rating vectors, by item index. `None` when the
/// co-rating user count is below `min_overlap` or a norm vanishes.
pub fn cosine_item_idx(ds: &Dataset, i: u32, j: u32, opts: &SimilarityOptions) -> Option<f64> {
    let s = corated_sums(ds.ratings_by_item(i), ds.ratings_by_item(j));
    let (nx2, ny2) = if opts.full_vector_norms {
        (sum_squares(ds.ratings_by_item(i)), sum_squares(ds.ratings_by_item(j)))
    } else {
        (s.sx2, s.sy2)
    };
    cosine_from_sums(&s, nx2, ny2, opts.min_overlap)
}

/// Pearson correlation between two users over their co-rated items, centering
/// each user on their mean over that co-rated subset. `None` when the overlap
/// is below `min_overlap` or either centered vector has zero variance.
pub fn pearson_user_idx(ds: &Dataset, u: u32, v: u32, opts: &SimilarityOptions) -> Option<f64> {
    let s = corated_sums(ds.ratings_by_user(u), ds.ratings_by_user(v));
    pearson_from_sums(&s, opts.min_overlap)
}

/// Ref-level cosine. Unknown items are an error, which is distinct from a
/// defined lookup with undefined similarity.
pub fn cosine_item(
    ds: &Dataset,
    i: &ItemRef,
    j: &ItemRef,
    opts: &SimilarityOptions,
) -> Result<Option<f64>> {
    let i = ds
        .item_index(i)
        .ok_or_else(|| Error::UnknownItem(i.to_string()))?;
    let j = ds
        .item_index(j)
        .ok_or_else(|| Error::UnknownItem(j.to_string()))?;
    Ok(cosine_item_idx(ds, i, j, opts))
}

/// Ref-level Pearson; unknown users are an error.
pub fn pearson_user(
    ds: &Dataset,
    u: &UserRef,
    v: &UserRef,
    opts: &SimilarityOptions,
) -> Result<Option<f64>> {
    let u = ds
        .user_index(u)
        .ok_or_else(|| Error::UnknownUser(u.to_string()))?;
    let v = ds
        .user_index(v)
        .ok_or_else(|| Error::UnknownUser(v.to_string()))?;
    Ok(pearson_user_idx(ds, u, v, opts))
}

/// One similarity kernel bound to a dataset, queryable by entity index.
/// Entries are computed on demand; the contract is value-identical to a
/// precomputed matrix.
#[derive(Debug, Clone, Copy)]
pub struct SimilarityView<'a> {
    ds: &'a Dataset,
    kind: SimilarityKind,
    opts: SimilarityOptions,
}

impl<'a> SimilarityView<'a> {
    pub fn new(ds: &'a Dataset, kind: SimilarityKind, opts: SimilarityOptions) -> Self {
        SimilarityView { ds, kind, opts }
    }

    pub fn item_cosine(ds: &'a Dataset, opts: SimilarityOptions) -> Self {
        Self::new(ds, SimilarityKind::ItemCosine, opts)
    }

    pub fn user_pearson(ds: &'a Dataset, opts: SimilarityOptions) -> Self {
        Self::new(ds, SimilarityKind::UserPearson, opts)
    }

    pub fn kind(&self) -> SimilarityKind {
        self.kind
    }

    pub fn options(&self) -> &SimilarityOptions {
        &self.opts
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.ds
    }

    pub fn sim(&self, a: u32, b: u32) -> Option<f64> {
        match self.kind {
            SimilarityKind::ItemCosine => cosine_item_idx(self.ds, a, b, &self.opts),
            SimilarityKind::UserPearson => pearson_user_idx(self.ds, a, b, &self.opts),
        }
    }

    /// The external identifier of an entity, used for deterministic
    /// tie-breaking.
    pub fn entity_ref(&self, idx: u32) -> &'a str {
        match self.kind {
            SimilarityKind::ItemCosine => self.ds.item_ref(idx).as_str(),
            SimilarityKind::UserPearson => self.ds.user_ref(idx).as_str(),
        }
    }
}

/// The `k` candidates most similar to `anchor`, excluding the anchor itself
/// and undefined similarities. Ties break by ascending entity identifier, so
/// the result is independent of candidate order.
pub fn top_k_neighbors(
    view: &SimilarityView<'_>,
    anchor: u32,
    k: usize,
    candidates: &[u32],
) -> Vec<(u32, f64)> {
    let mut scored: Vec<(u32, f64)> = candidates
        .iter()
        .filter(|&&c| c != anchor)
        .filter_map(|&c| view.sim(anchor, c).map(|s| (c, s)))
        .filter(|&(_, s)| !view.options().positive_only || s > 0.0)
        .collect();
    scored.sort_by(|x, y| {
        y.1.partial_cmp(&x.1)
            .expect("defined similarities are finite")
            .then_with(|| view.entity_ref(x.0).cmp(view.entity_ref(y.0)))
    });
    scored.truncate(k);
    scored
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DatasetBuilder, Rating, Source};

    fn rating(u: &str, i: &str, v: f64) -> Rating {
        Rating::new(UserRef::new(u), ItemRef::new(i), v, Source::Synth)
    }

    fn build(rs: &[(&str, &str, f64)]) -> Dataset {
        let mut b = DatasetBuilder::new();
        for &(u, i, v) in rs {
            b.push(rating(u, i, v)).unwrap();
        }
        b.build()
    }

    #[test]
    fn cosine_identical_vectors_is_one() {
        let ds = build(&[("u1", "i1", 4.0), ("u1", "i2", 4.0), ("u2", "i1", 2.0), ("u2", "i2", 2.0)]);
        let s = cosine_item(&ds, &ItemRef::new("i1"), &ItemRef::new("i2"), &SimilarityOptions::cosine())
            .unwrap()
            .unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_no_overlap_is_undefined() {
        let ds = build(&[("u1", "i1", 4.0), ("u2", "i2", 5.0)]);
        let s = cosine_item(&ds, &ItemRef::new("i1"), &ItemRef::new("i2"), &SimilarityOptions::cosine())
            .unwrap();
        assert_eq!(s, None);
    }

    #[test]
    fn cosine_hand_example() {
        // i = (4, 2), j = (2, 4) over the same two users:
        // (4*2 + 2*4) / (sqrt(20) * sqrt(20)) = 16 / 20 = 0.8
        let ds = build(&[("u1", "i", 4.0), ("u2", "i", 2.0), ("u1", "j", 2.0), ("u2", "j", 4.0)]);
        let s = cosine_item(&ds, &ItemRef::new("i"), &ItemRef::new("j"), &SimilarityOptions::cosine())
            .unwrap()
            .unwrap();
        assert!((s - 0.8).abs() < 1e-12);
    }

    #[test]
    fn full_vector_norms_shrink_cosine_when_support_differs() {
        let ds = build(&[
            ("u1", "i", 4.0),
            ("u2", "i", 2.0),
            ("u3", "i", 5.0), // rates i only
            ("u1", "j", 2.0),
            ("u2", "j", 4.0),
        ]);
        let corated = cosine_item(&ds, &ItemRef::new("i"), &ItemRef::new("j"), &SimilarityOptions::cosine())
            .unwrap()
            .unwrap();
        assert!((corated - 0.8).abs() < 1e-12);

        let opts = SimilarityOptions {
            full_vector_norms: true,
            ..SimilarityOptions::cosine()
        };
        let full = cosine_item(&ds, &ItemRef::new("i"), &ItemRef::new("j"), &opts)
            .unwrap()
            .unwrap();
        // Denominator grows to sqrt(16+4+25)*sqrt(20); numerator unchanged.
        let expected = 16.0 / (45.0_f64.sqrt() * 20.0_f64.sqrt());
        assert!((full - expected).abs() < 1e-12);
        assert!(full < corated);
    }

    #[test]
    fn unknown_item_is_an_error_not_undefined() {
        let ds = build(&[("u1", "i1", 4.0)]);
        let err = cosine_item(&ds, &ItemRef::new("i1"), &ItemRef::new("nope"), &SimilarityOptions::cosine());
        assert!(matches!(err, Err(Error::UnknownItem(_))));
    }

    #[test]
    fn pearson_translation_invariance() {
        // v rates each common item exactly one star above u.
        let ds = build(&[
            ("u", "i1", 1.0),
            ("u", "i2", 3.0),
            ("v", "i1", 2.0),
            ("v", "i2", 4.0),
        ]);
        let s = pearson_user(&ds, &UserRef::new("u"), &UserRef::new("v"), &SimilarityOptions::pearson())
            .unwrap()
            .unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_perfect_anticorrelation() {
        let ds = build(&[
            ("u", "i1", 1.0),
            ("u", "i2", 5.0),
            ("v", "i1", 5.0),
            ("v", "i2", 1.0),
        ]);
        let s = pearson_user(&ds, &UserRef::new("u"), &UserRef::new("v"), &SimilarityOptions::pearson())
            .unwrap()
            .unwrap();
        assert!((s + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_hand_example() {
        // u = (4, 3, 5), v = (2, 2, 4); centered u = (0, -1, 1),
        // v = (-2/3, -2/3, 4/3); r = 2 / sqrt(2 * 8/3) = sqrt(3)/2.
        let ds = build(&[
            ("u", "i1", 4.0),
            ("u", "i2", 3.0),
            ("u", "i3", 5.0),
            ("v", "i1", 2.0),
            ("v", "i2", 2.0),
            ("v", "i3", 4.0),
        ]);
        let s = pearson_user(&ds, &UserRef::new("u"), &UserRef::new("v"), &SimilarityOptions::pearson())
            .unwrap()
            .unwrap();
        assert!((s - 3.0_f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_centering_uses_corated_subset_mean() {
        // u's full mean is dragged up by i3 = 5, which v never rated. Over
        // the co-rated pair {i1, i2} the correlation is exactly 1.
        let ds = build(&[
            ("u", "i1", 2.0),
            ("u", "i2", 3.0),
            ("u", "i3", 5.0),
            ("v", "i1", 1.0),
            ("v", "i2", 4.0),
        ]);
        let s = pearson_user(&ds, &UserRef::new("u"), &UserRef::new("v"), &SimilarityOptions::pearson())
            .unwrap()
            .unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_undefined_below_overlap_or_without_variance() {
        let one_common = build(&[("u", "i1", 4.0), ("v", "i1", 5.0), ("v", "i2", 3.0)]);
        assert_eq!(
            pearson_user(&one_common, &UserRef::new("u"), &UserRef::new("v"), &SimilarityOptions::pearson())
                .unwrap(),
            None
        );

        let flat = build(&[
            ("u", "i1", 4.0),
            ("u", "i2", 4.0),
            ("v", "i1", 2.0),
            ("v", "i2", 5.0),
        ]);
        assert_eq!(
            pearson_user(&flat, &UserRef::new("u"), &UserRef::new("v"), &SimilarityOptions::pearson())
                .unwrap(),
            None
        );
    }

    #[test]
    fn self_similarity_is_one_when_defined() {
        let ds = build(&[
            ("u1", "i1", 4.0),
            ("u1", "i2", 2.0),
            ("u2", "i1", 3.0),
            ("u2", "i2", 5.0),
        ]);
        let cos = SimilarityView::item_cosine(&ds, SimilarityOptions::cosine());
        let pea = SimilarityView::user_pearson(&ds, SimilarityOptions::pearson());
        for idx in 0..2 {
            assert!((cos.sim(idx, idx).unwrap() - 1.0).abs() < 1e-9);
            assert!((pea.sim(idx, idx).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn symmetry_and_range_on_a_small_fixture() {
        let ds = build(&[
            ("u1", "i1", 1.0),
            ("u1", "i2", 5.0),
            ("u1", "i3", 3.0),
            ("u2", "i1", 4.0),
            ("u2", "i2", 2.0),
            ("u3", "i2", 3.0),
            ("u3", "i3", 4.0),
        ]);
        for view in [
            SimilarityView::item_cosine(&ds, SimilarityOptions::cosine()),
            SimilarityView::user_pearson(&ds, SimilarityOptions::pearson()),
        ] {
            let n = match view.kind() {
                SimilarityKind::ItemCosine => ds.item_count(),
                SimilarityKind::UserPearson => ds.user_count(),
            } as u32;
            for a in 0..n {
                for b in 0..n {
                    let ab = view.sim(a, b);
                    let ba = view.sim(b, a);
                    match (ab, ba) {
                        (Some(x), Some(y)) => {
                            assert!((x - y).abs() < 1e-12);
                            assert!(x.abs() <= 1.0 + 1e-9);
                        }
                        (None, None) => {}
                        other => panic!("asymmetric definedness: {other:?}"),
                    }
                }
            }
        }
    }

    #[test]
    fn cosine_of_nonnegative_vectors_is_nonnegative() {
        let ds = build(&[
            ("u1", "i1", 1.0),
            ("u1", "i2", 5.0),
            ("u2", "i1", 5.0),
            ("u2", "i2", 1.0),
        ]);
        let s = cosine_item_idx(&ds, 0, 1, &SimilarityOptions::cosine()).unwrap();
        assert!(s >= 0.0);
    }

    #[test]
    fn top_k_orders_and_truncates() {
        // Item ratings arranged so sim(i0, i1) = 1.0 and sim(i0, i2) = 0.8.
        let ds = build(&[
            ("u1", "i0", 4.0),
            ("u2", "i0", 2.0),
            ("u1", "i1", 2.0),
            ("u2", "i1", 1.0),
            ("u1", "i2", 2.0),
            ("u2", "i2", 4.0),
            ("u9", "i3", 3.0), // no overlap with i0
        ]);
        let view = SimilarityView::item_cosine(&ds, SimilarityOptions::cosine());
        let all: Vec<u32> = (0..ds.item_count() as u32).collect();
        let got = top_k_neighbors(&view, 0, 10, &all);
        let refs: Vec<&str> = got.iter().map(|&(i, _)| view.entity_ref(i)).collect();
        assert_eq!(refs, vec!["i1", "i2"]);
        assert!((got[0].1 - 1.0).abs() < 1e-12);
        assert!((got[1].1 - 0.8).abs() < 1e-12);

        let top1 = top_k_neighbors(&view, 0, 1, &all);
        assert_eq!(top1.len(), 1);
        assert_eq!(view.entity_ref(top1[0].0), "i1");
    }

    #[test]
    fn top_k_breaks_ties_by_ascending_identifier() {
        // i1 and i2 both have identical vectors to i0's co-rated support.
        let ds = build(&[
            ("u1", "i0", 4.0),
            ("u1", "i2", 3.0),
            ("u1", "i1", 3.0),
        ]);
        let view = SimilarityView::item_cosine(&ds, SimilarityOptions::cosine());
        let got = top_k_neighbors(&view, 0, 2, &[2, 1]);
        let refs: Vec<&str> = got.iter().map(|&(i, _)| view.entity_ref(i)).collect();
        assert_eq!(refs, vec!["i1", "i2"]);
    }

    #[test]
    fn positive_only_drops_nonpositive_sims() {
        let ds = build(&[
            ("u", "i1", 1.0),
            ("u", "i2", 5.0),
            ("v", "i1", 5.0),
            ("v", "i2", 1.0),
            ("u", "i3", 3.0),
            ("w", "i3", 3.0),
        ]);
        let opts = SimilarityOptions {
            positive_only: true,
            ..SimilarityOptions::pearson()
        };
        let view = SimilarityView::user_pearson(&ds, opts);
        // sim(u, v) = -1 gets dropped under positive_only.
        let got = top_k_neighbors(&view, 0, 5, &[1, 2]);
        assert!(got.is_empty());
    }
}
