//! Adam with bias correction over the network's named tensors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

use super::weights::ZoneWeights;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment accumulators shaped like the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: ZoneWeights,
    pub v: ZoneWeights,
    pub t: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(hidden: usize, dense_units: usize, config: AdamConfig) -> Self {
        AdamState {
            m: ZoneWeights::zeros(hidden, dense_units),
            v: ZoneWeights::zeros(hidden, dense_units),
            t: 0,
            config,
        }
    }
}

/// One Adam update over every parameter tensor.
pub fn adam_step(params: &mut ZoneWeights, grads: &ZoneWeights, state: &mut AdamState) -> Result<()> {
    state.t += 1;
    let cfg = state.config;
    let bc1 = 1.0 - libm::pow(cfg.beta1, state.t as f64);
    let bc2 = 1.0 - libm::pow(cfg.beta2, state.t as f64);

    let mut p_tensors = params.tensors_mut();
    let g_tensors = grads.tensors();
    let mut m_tensors = state.m.tensors_mut();
    let mut v_tensors = state.v.tensors_mut();

    for idx in 0..p_tensors.len() {
        let (_, p) = &mut p_tensors[idx];
        let (_, g) = &g_tensors[idx];
        let (_, m) = &mut m_tensors[idx];
        let (_, v) = &mut v_tensors[idx];
        if g.len() != p.len() {
            return Err(Error::ShapeMismatch {
                expected: p.len(),
                got: g.len(),
            });
        }
        for j in 0..p.len() {
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            p[j] -= cfg.learning_rate * m_hat / (math::sqrt(v_hat) + cfg.epsilon);
        }
    }
    Ok(())
}
