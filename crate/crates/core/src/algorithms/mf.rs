//! Biased matrix factorization trained by per-rating SGD.
//!
//! The model is r̂ = μ + b_u + b_i + p_u·q_i with μ fixed to the training
//! mean. Each pass shuffles the rating visit order with a pass-indexed
//! stream of the config seed, which makes training deterministic and
//! prefix-consistent: a model trained for T passes equals the first T
//! passes of any longer run with the same seed.

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algorithms::{apply_clamp, AlgorithmKind, FallbackStage, Prediction, PredictorConfig};
use crate::dataset::{Dataset, ItemRef, UserRef};
use crate::error::{Error, Result};

const MODEL_FORMAT: &str = "crossrec-mf";
const MODEL_VERSION: u32 = 1;

/// A trained factorization model. Parameters are stored dense, indexed in the
/// training set's interning order; ref lookups are rebuilt on load.
#[derive(Debug, Clone, PartialEq)]
pub struct MFModel {
    config: PredictorConfig,
    global_mean: f64,
    factors: usize,
    users: Vec<UserRef>,
    items: Vec<ItemRef>,
    user_lookup: HashMap<UserRef, u32>,
    item_lookup: HashMap<ItemRef, u32>,
    user_bias: Vec<f64>,
    item_bias: Vec<f64>,
    /// Row-major, `users.len() * factors`.
    user_factors: Vec<f64>,
    item_factors: Vec<f64>,
}

/// On-disk form. JSON with shortest-round-trip float formatting, so a
/// save/load cycle is value-exact.
#[derive(Serialize, Deserialize)]
struct ModelDoc {
    format: String,
    version: u32,
    config: PredictorConfig,
    global_mean: f64,
    factors: usize,
    users: Vec<UserRef>,
    items: Vec<ItemRef>,
    user_bias: Vec<f64>,
    item_bias: Vec<f64>,
    user_factors: Vec<f64>,
    item_factors: Vec<f64>,
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Train by SGD: T full passes, visit order reshuffled per pass, updates
///
/// ```text
/// e    = r - (μ + b_u + b_i + p_u·q_i)
/// b_u += η (e - λ b_u)
/// b_i += η (e - λ b_i)
/// p_u += η (e q_i - λ p_u)
/// q_i += η (e p_u_old - λ q_i)
/// ```
///
/// with the q update reading the pre-update p. A non-finite parameter after
/// any pass aborts with a divergence error naming that pass (1-based).
pub fn mf_train(train: &Dataset, cfg: &PredictorConfig) -> Result<MFModel> {
    debug_assert_eq!(cfg.kind, AlgorithmKind::Mf);
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }

    let f = cfg.latent_factors;
    let nu = train.user_count();
    let ni = train.item_count();
    let mu = train.global_mean().expect("train checked non-empty");

    // Stream 0 of the seed initializes; streams 1..=T drive the per-pass
    // shuffles. Biases start at zero, factors uniform in (-σ, σ).
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dist = Uniform::new(-cfg.init_scale, cfg.init_scale);
    let mut user_bias = vec![0.0; nu];
    let mut item_bias = vec![0.0; ni];
    let mut user_factors: Vec<f64> = (0..nu * f).map(|_| dist.sample(&mut init_rng)).collect();
    let mut item_factors: Vec<f64> = (0..ni * f).map(|_| dist.sample(&mut init_rng)).collect();

    let records = train.records();
    let mut order: Vec<u32> = (0..records.len() as u32).collect();
    let eta = cfg.learning_rate;
    let lambda = cfg.regularization;

    for pass in 0..cfg.iterations {
        let mut pass_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        pass_rng.set_stream(pass as u64 + 1);
        order.shuffle(&mut pass_rng);

        for &ridx in &order {
            let r = &records[ridx as usize];
            let (u, i) = (r.user as usize, r.item as usize);
            let pu = &mut user_factors[u * f..(u + 1) * f];
            let qi = &mut item_factors[i * f..(i + 1) * f];
            let mut dot = 0.0;
            for t in 0..f {
                dot += pu[t] * qi[t];
            }
            let e = r.value - (mu + user_bias[u] + item_bias[i] + dot);
            user_bias[u] += eta * (e - lambda * user_bias[u]);
            item_bias[i] += eta * (e - lambda * item_bias[i]);
            for t in 0..f {
                let p_old = pu[t];
                pu[t] += eta * (e * qi[t] - lambda * p_old);
                qi[t] += eta * (e * p_old - lambda * qi[t]);
            }
        }

        if !(all_finite(&user_bias)
            && all_finite(&item_bias)
            && all_finite(&user_factors)
            && all_finite(&item_factors))
        {
            return Err(Error::Divergence { pass: pass + 1 });
        }
    }

    let users = train.users().to_vec();
    let items = train.items().to_vec();
    let user_lookup = users
        .iter()
        .enumerate()
        .map(|(idx, u)| (u.clone(), idx as u32))
        .collect();
    let item_lookup = items
        .iter()
        .enumerate()
        .map(|(idx, i)| (i.clone(), idx as u32))
        .collect();

    Ok(MFModel {
        config: cfg.clone(),
        global_mean: mu,
        factors: f,
        users,
        items,
        user_lookup,
        item_lookup,
        user_bias,
        item_bias,
        user_factors,
        item_factors,
    })
}

/// Score a pair. Unknown entities drop their terms; with both unknown the
/// value degrades to μ and the prediction counts as unserved.
pub fn mf_predict(model: &MFModel, u: &UserRef, i: &ItemRef, cfg: &PredictorConfig) -> Prediction {
    let ui = model.user_lookup.get(u).copied();
    let ii = model.item_lookup.get(i).copied();
    let f = model.factors;
    let mut value = model.global_mean;
    if let Some(u) = ui {
        value += model.user_bias[u as usize];
    }
    if let Some(i) = ii {
        value += model.item_bias[i as usize];
    }
    if let (Some(u), Some(i)) = (ui, ii) {
        let pu = &model.user_factors[u as usize * f..(u as usize + 1) * f];
        let qi = &model.item_factors[i as usize * f..(i as usize + 1) * f];
        let mut dot = 0.0;
        for t in 0..f {
            dot += pu[t] * qi[t];
        }
        value += dot;
    }
    let served = ui.is_some() || ii.is_some();
    Prediction {
        value: apply_clamp(value, cfg.clamp),
        served,
        fallback_level: if served {
            None
        } else {
            Some(FallbackStage::GlobalMean)
        },
    }
}

impl MFModel {
    pub fn config(&self) -> &PredictorConfig {
        &self.config
    }

    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }

    pub fn factor_count(&self) -> usize {
        self.factors
    }

    pub fn users(&self) -> &[UserRef] {
        &self.users
    }

    pub fn items(&self) -> &[ItemRef] {
        &self.items
    }

    pub fn user_bias_of(&self, u: &UserRef) -> Option<f64> {
        self.user_lookup.get(u).map(|&x| self.user_bias[x as usize])
    }

    pub fn item_bias_of(&self, i: &ItemRef) -> Option<f64> {
        self.item_lookup.get(i).map(|&x| self.item_bias[x as usize])
    }

    pub fn user_factors_of(&self, u: &UserRef) -> Option<&[f64]> {
        self.user_lookup
            .get(u)
            .map(|&x| &self.user_factors[x as usize * self.factors..(x as usize + 1) * self.factors])
    }

    pub fn item_factors_of(&self, i: &ItemRef) -> Option<&[f64]> {
        self.item_lookup
            .get(i)
            .map(|&x| &self.item_factors[x as usize * self.factors..(x as usize + 1) * self.factors])
    }

    pub fn param_count(&self) -> usize {
        self.user_bias.len()
            + self.item_bias.len()
            + self.user_factors.len()
            + self.item_factors.len()
    }

    /// Flattened parameter vector: user biases, item biases, user factors
    /// (row-major), item factors (row-major). [`Self::gradient`] uses the
    /// same layout.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        out.extend_from_slice(&self.user_bias);
        out.extend_from_slice(&self.item_bias);
        out.extend_from_slice(&self.user_factors);
        out.extend_from_slice(&self.item_factors);
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::LengthMismatch {
                left: self.param_count(),
                right: params.len(),
            });
        }
        let (ub, rest) = params.split_at(self.user_bias.len());
        let (ib, rest) = rest.split_at(self.item_bias.len());
        let (uf, qf) = rest.split_at(self.user_factors.len());
        self.user_bias.copy_from_slice(ub);
        self.item_bias.copy_from_slice(ib);
        self.user_factors.copy_from_slice(uf);
        self.item_factors.copy_from_slice(qf);
        Ok(())
    }

    fn indices_of(&self, ds: &Dataset) -> Result<Vec<(u32, u32, f64)>> {
        ds.ratings()
            .map(|r| {
                let u = *self
                    .user_lookup
                    .get(&r.user)
                    .ok_or_else(|| Error::UnknownUser(r.user.to_string()))?;
                let i = *self
                    .item_lookup
                    .get(&r.item)
                    .ok_or_else(|| Error::UnknownItem(r.item.to_string()))?;
                Ok((u, i, r.value))
            })
            .collect()
    }

    /// The training objective over `ds`: every rating contributes its squared
    /// error plus λ (b_u² + b_i² + ‖p_u‖² + ‖q_i‖²). Every rated entity must
    /// be known to the model.
    pub fn loss(&self, ds: &Dataset) -> Result<f64> {
        let lambda = self.config.regularization;
        let f = self.factors;
        let mut total = 0.0;
        for (u, i, value) in self.indices_of(ds)? {
            let (u, i) = (u as usize, i as usize);
            let pu = &self.user_factors[u * f..(u + 1) * f];
            let qi = &self.item_factors[i * f..(i + 1) * f];
            let dot: f64 = pu.iter().zip(qi).map(|(p, q)| p * q).sum();
            let e = value - (self.global_mean + self.user_bias[u] + self.item_bias[i] + dot);
            let penalty = self.user_bias[u].powi(2)
                + self.item_bias[i].powi(2)
                + pu.iter().map(|p| p * p).sum::<f64>()
                + qi.iter().map(|q| q * q).sum::<f64>();
            total += e * e + lambda * penalty;
        }
        Ok(total)
    }

    /// Analytic gradient of [`Self::loss`] with respect to every parameter,
    /// in [`Self::params`] layout.
    pub fn gradient(&self, ds: &Dataset) -> Result<Vec<f64>> {
        let lambda = self.config.regularization;
        let f = self.factors;
        let mut g_ub = vec![0.0; self.user_bias.len()];
        let mut g_ib = vec![0.0; self.item_bias.len()];
        let mut g_uf = vec![0.0; self.user_factors.len()];
        let mut g_if = vec![0.0; self.item_factors.len()];
        for (u, i, value) in self.indices_of(ds)? {
            let (u, i) = (u as usize, i as usize);
            let pu = &self.user_factors[u * f..(u + 1) * f];
            let qi = &self.item_factors[i * f..(i + 1) * f];
            let dot: f64 = pu.iter().zip(qi).map(|(p, q)| p * q).sum();
            let e = value - (self.global_mean + self.user_bias[u] + self.item_bias[i] + dot);
            g_ub[u] += -2.0 * e + 2.0 * lambda * self.user_bias[u];
            g_ib[i] += -2.0 * e + 2.0 * lambda * self.item_bias[i];
            for t in 0..f {
                g_uf[u * f + t] += -2.0 * e * qi[t] + 2.0 * lambda * pu[t];
                g_if[i * f + t] += -2.0 * e * pu[t] + 2.0 * lambda * qi[t];
            }
        }
        let mut out = Vec::with_capacity(self.param_count());
        out.extend_from_slice(&g_ub);
        out.extend_from_slice(&g_ib);
        out.extend_from_slice(&g_uf);
        out.extend_from_slice(&g_if);
        Ok(out)
    }

    pub fn save(&self, w: impl Write) -> Result<()> {
        let doc = ModelDoc {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            config: self.config.clone(),
            global_mean: self.global_mean,
            factors: self.factors,
            users: self.users.clone(),
            items: self.items.clone(),
            user_bias: self.user_bias.clone(),
            item_bias: self.item_bias.clone(),
            user_factors: self.user_factors.clone(),
            item_factors: self.item_factors.clone(),
        };
        serde_json::to_writer(w, &doc)?;
        Ok(())
    }

    pub fn load(r: impl Read) -> Result<MFModel> {
        let doc: ModelDoc = serde_json::from_reader(r)?;
        if doc.format != MODEL_FORMAT {
            return Err(Error::ModelFormat(format!(
                "expected format {MODEL_FORMAT:?}, found {:?}",
                doc.format
            )));
        }
        if doc.version != MODEL_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported version {} (expected {MODEL_VERSION})",
                doc.version
            )));
        }
        let (nu, ni, f) = (doc.users.len(), doc.items.len(), doc.factors);
        if doc.user_bias.len() != nu
            || doc.item_bias.len() != ni
            || doc.user_factors.len() != nu * f
            || doc.item_factors.len() != ni * f
        {
            return Err(Error::ModelFormat(
                "parameter block lengths do not match the entity tables".to_string(),
            ));
        }
        let user_lookup = doc
            .users
            .iter()
            .enumerate()
            .map(|(idx, u)| (u.clone(), idx as u32))
            .collect();
        let item_lookup = doc
            .items
            .iter()
            .enumerate()
            .map(|(idx, i)| (i.clone(), idx as u32))
            .collect();
        Ok(MFModel {
            config: doc.config,
            global_mean: doc.global_mean,
            factors: doc.factors,
            users: doc.users,
            items: doc.items,
            user_lookup,
            item_lookup,
            user_bias: doc.user_bias,
            item_bias: doc.item_bias,
            user_factors: doc.user_factors,
            item_factors: doc.item_factors,
        })
    }
}
