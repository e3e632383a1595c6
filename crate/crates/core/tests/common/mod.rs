//! Reference machinery shared by the oracle and acceptance suites: a dense
//! rating matrix with naive kernel and predictor implementations, Simpson
//! integration of the t density, and a small factorization fixture.

#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crossrec_core::dataset::{Dataset, DatasetBuilder, ItemRef, Rating, Source, UserRef};

/// Part of the similarity contract: computed values within rounding residue
/// of the unit are exactly +/-1, so perfectly similar entities tie exactly
/// and neighborhood order is decided by name, not by accumulation order.
pub fn snap_unit(r: f64) -> f64 {
    if r.abs() >= 1.0 - 1e-14 {
        return r.signum();
    }
    r
}

/// A dense rating matrix with explicit row and column names. Every reference
/// computation below walks this matrix directly; nothing is shared with the
/// library's sparse adjacency structures.
pub struct DenseFixture {
    pub users: Vec<String>,
    pub items: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
}

impl DenseFixture {
    pub fn random(seed: u64, user_count: usize, item_count: usize, density: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let users = (0..user_count).map(|u| format!("u{u:02}")).collect();
        let items = (0..item_count).map(|i| format!("i{i:02}")).collect();
        let cells = (0..user_count)
            .map(|_| {
                (0..item_count)
                    .map(|_| {
                        (rng.gen::<f64>() < density).then(|| rng.gen_range(1..=5) as f64)
                    })
                    .collect()
            })
            .collect();
        DenseFixture {
            users,
            items,
            cells,
        }
    }

    pub fn dataset(&self) -> Dataset {
        let mut b = DatasetBuilder::new();
        for (u, row) in self.cells.iter().enumerate() {
            for (i, cell) in row.iter().enumerate() {
                if let Some(value) = cell {
                    b.push(Rating::new(
                        UserRef::new(self.users[u].clone()),
                        ItemRef::new(self.items[i].clone()),
                        *value,
                        Source::Synth,
                    ))
                    .unwrap();
                }
            }
        }
        b.build()
    }

    pub fn user_known(&self, u: usize) -> bool {
        self.cells[u].iter().any(|c| c.is_some())
    }

    pub fn item_known(&self, i: usize) -> bool {
        self.cells.iter().any(|row| row[i].is_some())
    }

    pub fn user_mean(&self, u: usize) -> f64 {
        let vals: Vec<f64> = self.cells[u].iter().filter_map(|&c| c).collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    }

    pub fn item_mean(&self, i: usize) -> f64 {
        let vals: Vec<f64> = self.cells.iter().filter_map(|row| row[i]).collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    }

    pub fn global_mean(&self) -> f64 {
        let vals: Vec<f64> = self
            .cells
            .iter()
            .flat_map(|row| row.iter().filter_map(|&c| c))
            .collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    }

    /// Cosine between item columns over their co-rated rows; `full_norms`
    /// switches the denominator to whole-column norms.
    pub fn cosine(&self, i: usize, j: usize, min_overlap: usize, full_norms: bool) -> Option<f64> {
        let mut dot = 0.0;
        let mut co_ni = 0.0;
        let mut co_nj = 0.0;
        let mut n = 0usize;
        for row in &self.cells {
            if let (Some(x), Some(y)) = (row[i], row[j]) {
                dot += x * y;
                co_ni += x * x;
                co_nj += y * y;
                n += 1;
            }
        }
        if n < min_overlap.max(1) {
            return None;
        }
        let (ni2, nj2) = if full_norms {
            let full = |col: usize| -> f64 {
                self.cells
                    .iter()
                    .filter_map(|row| row[col])
                    .map(|v| v * v)
                    .sum()
            };
            (full(i), full(j))
        } else {
            (co_ni, co_nj)
        };
        let denom = ni2.sqrt() * nj2.sqrt();
        (denom > 0.0).then(|| snap_unit(dot / denom))
    }

    /// Pearson between user rows, centering each on its mean over the
    /// co-rated columns. Two-pass, unlike the library's single-pass sums.
    pub fn pearson(&self, u: usize, v: usize, min_overlap: usize) -> Option<f64> {
        let pairs: Vec<(f64, f64)> = self.cells[u]
            .iter()
            .zip(&self.cells[v])
            .filter_map(|(&x, &y)| Some((x?, y?)))
            .collect();
        if pairs.len() < min_overlap.max(2) {
            return None;
        }
        let n = pairs.len() as f64;
        let mx = pairs.iter().map(|&(x, _)| x).sum::<f64>() / n;
        let my = pairs.iter().map(|&(_, y)| y).sum::<f64>() / n;
        let mut cov = 0.0;
        let mut ssx = 0.0;
        let mut ssy = 0.0;
        for &(x, y) in &pairs {
            cov += (x - mx) * (y - my);
            ssx += (x - mx) * (x - mx);
            ssy += (y - my) * (y - my);
        }
        if ssx <= 1e-12 || ssy <= 1e-12 {
            return None;
        }
        Some(snap_unit(cov / (ssx.sqrt() * ssy.sqrt())))
    }

    /// The item-mean, user-mean, global-mean chain on whichever entities are
    /// known. Returned values are what an unserved prediction should carry.
    pub fn fallback(&self, u: Option<usize>, i: Option<usize>) -> f64 {
        if let Some(i) = i {
            return self.item_mean(i);
        }
        if let Some(u) = u {
            return self.user_mean(u);
        }
        self.global_mean()
    }

    /// Reference user-user prediction: rank every rater of `i` by Pearson
    /// similarity to `u` (ties by name), keep `k`, and apply the
    /// mean-centered weighted sum. Returns (value, served).
    pub fn uu_reference(&self, u: usize, i: usize, k: usize) -> (f64, bool) {
        let known = (self.user_known(u).then_some(u), self.item_known(i).then_some(i));
        let (Some(u), Some(i)) = known else {
            return (self.fallback(known.0, known.1), false);
        };
        let mut cands: Vec<(usize, f64)> = (0..self.users.len())
            .filter(|&v| v != u && self.cells[v][i].is_some())
            .filter_map(|v| self.pearson(u, v, 2).map(|s| (v, s)))
            .collect();
        cands.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap()
                .then_with(|| self.users[a.0].cmp(&self.users[b.0]))
        });
        cands.truncate(k);
        let num: f64 = cands
            .iter()
            .map(|&(v, s)| s * (self.cells[v][i].unwrap() - self.user_mean(v)))
            .sum();
        let den: f64 = cands.iter().map(|&(_, s)| s.abs()).sum();
        if cands.is_empty() || den <= 0.0 {
            return (self.fallback(Some(u), Some(i)), false);
        }
        ((self.user_mean(u) + num / den).clamp(1.0, 5.0), true)
    }

    /// Reference item-item prediction: rank the items `u` rated by cosine
    /// similarity to `i` and apply the uncentered weighted sum.
    pub fn ii_reference(&self, u: usize, i: usize, k: usize) -> (f64, bool) {
        let known = (self.user_known(u).then_some(u), self.item_known(i).then_some(i));
        let (Some(u), Some(i)) = known else {
            return (self.fallback(known.0, known.1), false);
        };
        let mut cands: Vec<(usize, f64)> = (0..self.items.len())
            .filter(|&j| j != i && self.cells[u][j].is_some())
            .filter_map(|j| self.cosine(i, j, 1, false).map(|s| (j, s)))
            .collect();
        cands.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap()
                .then_with(|| self.items[a.0].cmp(&self.items[b.0]))
        });
        cands.truncate(k);
        let num: f64 = cands
            .iter()
            .map(|&(j, s)| s * self.cells[u][j].unwrap())
            .sum();
        let den: f64 = cands.iter().map(|&(_, s)| s.abs()).sum();
        if cands.is_empty() || den <= 0.0 {
            return (self.fallback(Some(u), Some(i)), false);
        }
        ((num / den).clamp(1.0, 5.0), true)
    }
}

/// Simpson's rule over `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for s in 1..n {
        let x = a + s as f64 * h;
        sum += f(x) * if s % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

/// Two-sided Student t tail probability by numerical integration. The
/// substitution x = sqrt(df) tan(theta) maps the real line onto
/// (-pi/2, pi/2) and turns the unnormalized density into cos^(df-1)(theta),
/// so the normalizing constant is just the same integral over the full
/// interval and no gamma function is needed anywhere.
pub fn t_two_sided_p_by_integration(t: f64, df: f64) -> f64 {
    let integrand = |theta: f64| theta.cos().powf(df - 1.0);
    let theta0 = (t.abs() / df.sqrt()).atan();
    let tail = simpson(&integrand, theta0, FRAC_PI_2, 40_000);
    let total = simpson(&integrand, -FRAC_PI_2, FRAC_PI_2, 80_000);
    (2.0 * tail / total).min(1.0)
}

/// A 20-rating training fixture shared by the factorization checks.
pub fn mf_fixture() -> Dataset {
    let mut b = DatasetBuilder::new();
    for (u, i, v) in [
        ("u1", "i1", 5.0),
        ("u1", "i2", 3.0),
        ("u1", "i3", 4.0),
        ("u1", "i4", 4.0),
        ("u2", "i1", 3.0),
        ("u2", "i2", 1.0),
        ("u2", "i3", 2.0),
        ("u2", "i5", 3.0),
        ("u3", "i2", 4.0),
        ("u3", "i3", 4.0),
        ("u3", "i4", 3.0),
        ("u3", "i6", 5.0),
        ("u4", "i1", 2.0),
        ("u4", "i4", 5.0),
        ("u4", "i5", 4.0),
        ("u4", "i6", 4.0),
        ("u5", "i2", 2.0),
        ("u5", "i3", 5.0),
        ("u5", "i5", 1.0),
        ("u5", "i6", 3.0),
    ] {
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
