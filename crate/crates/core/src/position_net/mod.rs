//! Per-zone LSTM + dense position regression trained with Adam on MSE.
//!
//! A fingerprint of k sources is fed to the LSTM as a length-k sequence of
//! one standardized RSSI value per timestep, in canonical source order. The
//! final hidden state goes through a ReLU dense layer and a linear output
//! layer producing (x, y) in meters.

mod adam;
mod net;
mod weights;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use weights::{DenseWeights, LstmWeights, ZoneWeights};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::radio_model::Fingerprint;
use crate::zone_classifier::{knn_classify, KnnConfig};
use crate::ReferencePoint;

/// Floor applied to per-source standard deviations so constant features
/// normalize to zero instead of dividing by zero.
const STD_FLOOR: f64 = 1e-6;

/// Per-source standardization statistics, learned from the training set and
/// stored with the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn fit(fingerprints: &[&Fingerprint]) -> Result<Self> {
        let first = fingerprints
            .first()
            .ok_or_else(|| Error::Config("cannot fit stats on an empty set".to_string()))?;
        let k = first.len();
        let n = fingerprints.len() as f64;
        let mut mean = alloc::vec![0.0; k];
        for fp in fingerprints {
            if fp.len() != k {
                return Err(Error::ShapeMismatch {
                    expected: k,
                    got: fp.len(),
                });
            }
            for (m, v) in mean.iter_mut().zip(&fp.rssi_dbm) {
                *m += v / n;
            }
        }
        let mut var = alloc::vec![0.0; k];
        for fp in fingerprints {
            for (s, (v, m)) in var.iter_mut().zip(fp.rssi_dbm.iter().zip(&mean)) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let std = var.iter().map(|&v| math::sqrt(v).max(STD_FLOOR)).collect();
        Ok(NormStats { mean, std })
    }

    pub fn normalize(&self, fp: &Fingerprint) -> Result<Vec<f64>> {
        if fp.len() != self.mean.len() {
            return Err(Error::ShapeMismatch {
                expected: self.mean.len(),
                got: fp.len(),
            });
        }
        Ok(fp
            .rssi_dbm
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    pub fn denormalize(&self, seq: &[f64]) -> Result<Fingerprint> {
        if seq.len() != self.mean.len() {
            return Err(Error::ShapeMismatch {
                expected: self.mean.len(),
                got: seq.len(),
            });
        }
        Ok(Fingerprint::new(
            seq.iter()
                .zip(self.mean.iter().zip(&self.std))
                .map(|(v, (m, s))| v * s + m)
                .collect(),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub hidden_units: usize,
    pub dense_units: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 32,
            hidden_units: 32,
            dense_units: 16,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be at least 1".to_string()));
        }
        if self.hidden_units == 0 || self.dense_units == 0 {
            return Err(Error::Config("layer sizes must be at least 1".to_string()));
        }
        Ok(())
    }
}

/// Trained network and stats for one zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneModel {
    pub weights: ZoneWeights,
    pub stats: NormStats,
    /// Mean training MSE per epoch.
    pub loss_history: Vec<f64>,
}

/// One trained model per zone label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionModel {
    pub zones: BTreeMap<usize, ZoneModel>,
    pub config: TrainConfig,
}

/// One labeled training sample: fingerprint plus ground-truth position.
pub type TrainSample = (Fingerprint, (f64, f64));

/// Mean over the batch and both coordinates of the squared error.
pub fn mse_loss(pred: &[(f64, f64)], target: &[(f64, f64)]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::ShapeMismatch {
            expected: target.len(),
            got: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::Config("empty batch".to_string()));
    }
    let n = (pred.len() * 2) as f64;
    Ok(pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p.0 - t.0) * (p.0 - t.0) + (p.1 - t.1) * (p.1 - t.1))
        .sum::<f64>()
        / n)
}

/// Run the network on one fingerprint.
pub fn model_forward(
    fp: &Fingerprint,
    weights: &ZoneWeights,
    stats: &NormStats,
) -> Result<(f64, f64)> {
    let seq = stats.normalize(fp)?;
    let cache = net::forward(weights, &seq)?;
    Ok((cache.out[0], cache.out[1]))
}

/// Batch MSE and exact gradients for every parameter, via reverse-mode
/// differentiation through the unrolled sequence.
///
/// Batch entries are (normalized sequence, target position).
pub fn backward(batch: &[(Vec<f64>, (f64, f64))], weights: &ZoneWeights) -> Result<(f64, ZoneWeights)> {
    if batch.is_empty() {
        return Err(Error::Config("empty batch".to_string()));
    }
    let mut grads = ZoneWeights::zeros(weights.hidden(), weights.dense_units());
    let n = batch.len() as f64;
    let mut loss = 0.0;
    for (seq, target) in batch {
        let cache = net::forward(weights, seq)?;
        let e0 = cache.out[0] - target.0;
        let e1 = cache.out[1] - target.1;
        loss += (e0 * e0 + e1 * e1) / (2.0 * n);
        // d(batch MSE)/d(out) with mean over batch and both coordinates
        net::backward_into(weights, &cache, [e0 / n, e1 / n], &mut grads)?;
    }
    if !loss.is_finite() {
        return Err(Error::Domain(format!("non-finite training loss {loss}")));
    }
    Ok((loss, grads))
}

fn zone_rng(seed: u64, zone: usize) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed ^ (zone as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn shuffle<R: Rng>(indices: &mut [usize], rng: &mut R) {
    for i in (1..indices.len()).rev() {
        let j = rng.random_range(0..=i);
        indices.swap(i, j);
    }
}

fn train_zone(zone: usize, samples: &[TrainSample], config: &TrainConfig) -> Result<ZoneModel> {
    if samples.is_empty() {
        return Err(Error::Training {
            zone,
            message: "empty dataset".to_string(),
        });
    }
    let fps: Vec<&Fingerprint> = samples.iter().map(|(fp, _)| fp).collect();
    let stats = NormStats::fit(&fps).map_err(|e| Error::Training {
        zone,
        message: e.to_string(),
    })?;
    let normalized: Vec<(Vec<f64>, (f64, f64))> = samples
        .iter()
        .map(|(fp, pos)| Ok((stats.normalize(fp)?, *pos)))
        .collect::<Result<_>>()?;

    let mut rng = zone_rng(config.seed, zone);
    let mut weights = ZoneWeights::init(config.hidden_units, config.dense_units, &mut rng);
    let mut adam_state = AdamState::new(config.hidden_units, config.dense_units, config.adam);

    let mut indices: Vec<usize> = (0..normalized.len()).collect();
    let mut loss_history = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        shuffle(&mut indices, &mut rng);
        let mut epoch_loss = 0.0;
        for chunk in indices.chunks(config.batch_size) {
            let batch: Vec<(Vec<f64>, (f64, f64))> =
                chunk.iter().map(|&i| normalized[i].clone()).collect();
            let (loss, grads) = backward(&batch, &weights).map_err(|e| Error::Training {
                zone,
                message: e.to_string(),
            })?;
            adam_step(&mut weights, &grads, &mut adam_state)?;
            epoch_loss += loss * chunk.len() as f64;
        }
        loss_history.push(epoch_loss / normalized.len() as f64);
    }

    Ok(ZoneModel {
        weights,
        stats,
        loss_history,
    })
}

/// Train one model per zone. Deterministic given the config seed; zones are
/// seeded independently so their trainings do not interact.
pub fn train(dataset: &BTreeMap<usize, Vec<TrainSample>>, config: &TrainConfig) -> Result<PositionModel> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Config("empty training dataset".to_string()));
    }
    let mut zones = BTreeMap::new();
    for (&zone, samples) in dataset {
        zones.insert(zone, train_zone(zone, samples, config)?);
    }
    Ok(PositionModel {
        zones,
        config: *config,
    })
}

/// Two-step prediction: KNN picks the zone, that zone's network regresses
/// the position.
pub fn predict(
    fp: &Fingerprint,
    model: &PositionModel,
    db: &[ReferencePoint],
    knn: &KnnConfig,
) -> Result<(f64, f64)> {
    let zone = knn_classify(fp, db, knn)?;
    let zone_model = model.zones.get(&zone).ok_or(Error::MissingZone(zone))?;
    model_forward(fp, &zone_model.weights, &zone_model.stats)
}
