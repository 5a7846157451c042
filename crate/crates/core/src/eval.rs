//! Error metrics, the nearest-fingerprint baseline, and test-set evaluation.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::position_net::{predict, PositionModel};
use crate::radio_model::{fingerprint_distance, Fingerprint, ReferencePoint};
use crate::zone_classifier::KnnConfig;

/// Planar Euclidean distance between prediction and ground truth, meters.
pub fn euclidean_error(pred: (f64, f64), truth: (f64, f64)) -> Result<f64> {
    if !pred.0.is_finite() || !pred.1.is_finite() || !truth.0.is_finite() || !truth.1.is_finite() {
        return Err(Error::Domain(format!(
            "non-finite coordinates: pred {pred:?}, truth {truth:?}"
        )));
    }
    Ok(math::hypot(pred.0 - truth.0, pred.1 - truth.1))
}

/// Coordinates of the radio-map entry whose fingerprint is closest to the
/// query; distance ties go to the lower id.
pub fn nearest_fingerprint_baseline(
    query: &Fingerprint,
    radio_map: &[ReferencePoint],
) -> Result<(f64, f64)> {
    let mut best: Option<(f64, usize, (f64, f64))> = None;
    for rp in radio_map {
        let fp = rp
            .fingerprint
            .as_ref()
            .ok_or_else(|| Error::Config(format!("radio map entry {} has no fingerprint", rp.id)))?;
        let d = fingerprint_distance(query, fp)?;
        let candidate = (d, rp.id, (rp.x, rp.y));
        let replace = match &best {
            None => true,
            Some((bd, bid, _)) => d < *bd || (d == *bd && rp.id < *bid),
        };
        if replace {
            best = Some(candidate);
        }
    }
    best.map(|(_, _, pos)| pos)
        .ok_or_else(|| Error::Config("empty radio map".to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub truth: (f64, f64),
    pub predicted: (f64, f64),
    pub error_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub points: Vec<EvalPoint>,
    pub mean_error_m: f64,
    pub median_error_m: f64,
    pub p90_error_m: f64,
    /// Sorted per-point errors; pairing index i with (i+1)/n gives the CDF.
    pub error_cdf_m: Vec<f64>,
    /// Test points whose prediction failed and were excluded.
    pub excluded: usize,
}

/// Nearest-rank percentile of a sorted sample.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = libm::ceil(q * sorted.len() as f64) as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn summarize_errors(errors: &[f64], points: Vec<EvalPoint>, excluded: usize) -> EvalReport {
    let mut sorted = errors.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mean = if sorted.is_empty() {
        0.0
    } else {
        sorted.iter().sum::<f64>() / sorted.len() as f64
    };
    EvalReport {
        points,
        mean_error_m: mean,
        median_error_m: percentile(&sorted, 0.5),
        p90_error_m: percentile(&sorted, 0.9),
        error_cdf_m: sorted,
        excluded,
    }
}

/// Run the two-step predictor on every test fingerprint and aggregate.
///
/// Prediction failures exclude the point and bump the exclusion count
/// instead of aborting the whole evaluation.
pub fn evaluate(
    model: &PositionModel,
    db: &[ReferencePoint],
    knn: &KnnConfig,
    test_set: &[(Fingerprint, (f64, f64))],
) -> Result<EvalReport> {
    if test_set.is_empty() {
        return Err(Error::Config("empty test set".to_string()));
    }
    let mut points = Vec::with_capacity(test_set.len());
    let mut errors = Vec::with_capacity(test_set.len());
    let mut excluded = 0;
    for (fp, truth) in test_set {
        match predict(fp, model, db, knn).and_then(|pred| Ok((pred, euclidean_error(pred, *truth)?))) {
            Ok((pred, err)) => {
                points.push(EvalPoint {
                    truth: *truth,
                    predicted: pred,
                    error_m: err,
                });
                errors.push(err);
            }
            Err(_) => excluded += 1,
        }
    }
    Ok(summarize_errors(&errors, points, excluded))
}

/// Mean error of the nearest-fingerprint baseline over the same test set.
pub fn baseline_mean_error(
    radio_map: &[ReferencePoint],
    test_set: &[(Fingerprint, (f64, f64))],
) -> Result<f64> {
    if test_set.is_empty() {
        return Err(Error::Config("empty test set".to_string()));
    }
    let mut total = 0.0;
    for (fp, truth) in test_set {
        let pred = nearest_fingerprint_baseline(fp, radio_map)?;
        total += euclidean_error(pred, *truth)?;
    }
    Ok(total / test_set.len() as f64)
}
