//! Parameter containers for the LSTM + dense regression network.
//!
//! The same container doubles as gradient and Adam-moment storage, so every
//! consumer walks the tensors through `tensors()` / `tensors_mut()` in one
//! fixed canonical order.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::math;
use crate::matrix::Matrix;

/// Gate weights for a single-layer LSTM with scalar inputs.
///
/// `w_*` are input→hidden (H×1), `u_*` hidden→hidden (H×H), `b_*` biases.
/// Gate order everywhere is input, forget, candidate, output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmWeights {
    pub hidden: usize,
    pub w_i: Matrix,
    pub u_i: Matrix,
    pub b_i: Vec<f64>,
    pub w_f: Matrix,
    pub u_f: Matrix,
    pub b_f: Vec<f64>,
    pub w_g: Matrix,
    pub u_g: Matrix,
    pub b_g: Vec<f64>,
    pub w_o: Matrix,
    pub u_o: Matrix,
    pub b_o: Vec<f64>,
}

/// Dense head: H → `dense_units` with ReLU, then `dense_units` → 2 linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseWeights {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneWeights {
    pub lstm: LstmWeights,
    pub dense: DenseWeights,
}

impl ZoneWeights {
    pub fn zeros(hidden: usize, dense_units: usize) -> Self {
        ZoneWeights {
            lstm: LstmWeights {
                hidden,
                w_i: Matrix::zeros(hidden, 1),
                u_i: Matrix::zeros(hidden, hidden),
                b_i: vec![0.0; hidden],
                w_f: Matrix::zeros(hidden, 1),
                u_f: Matrix::zeros(hidden, hidden),
                b_f: vec![0.0; hidden],
                w_g: Matrix::zeros(hidden, 1),
                u_g: Matrix::zeros(hidden, hidden),
                b_g: vec![0.0; hidden],
                w_o: Matrix::zeros(hidden, 1),
                u_o: Matrix::zeros(hidden, hidden),
                b_o: vec![0.0; hidden],
            },
            dense: DenseWeights {
                w1: Matrix::zeros(dense_units, hidden),
                b1: vec![0.0; dense_units],
                w2: Matrix::zeros(2, dense_units),
                b2: vec![0.0; 2],
            },
        }
    }

    /// Seeded initialization: matrices uniform in ±1/√fan_in, forget-gate
    /// bias at 1.0, all other biases zero.
    pub fn init<R: Rng>(hidden: usize, dense_units: usize, rng: &mut R) -> Self {
        let mut w = Self::zeros(hidden, dense_units);
        {
            let mats: [&mut Matrix; 10] = [
                &mut w.lstm.w_i,
                &mut w.lstm.u_i,
                &mut w.lstm.w_f,
                &mut w.lstm.u_f,
                &mut w.lstm.w_g,
                &mut w.lstm.u_g,
                &mut w.lstm.w_o,
                &mut w.lstm.u_o,
                &mut w.dense.w1,
                &mut w.dense.w2,
            ];
            for m in mats {
                let bound = 1.0 / math::sqrt(m.cols as f64);
                for v in &mut m.data {
                    *v = rng.random_range(-bound..=bound);
                }
            }
        }
        for b in &mut w.lstm.b_f {
            *b = 1.0;
        }
        w
    }

    pub fn hidden(&self) -> usize {
        self.lstm.hidden
    }

    pub fn dense_units(&self) -> usize {
        self.dense.b1.len()
    }

    pub fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("lstm.w_i", self.lstm.w_i.data.as_slice()),
            ("lstm.u_i", self.lstm.u_i.data.as_slice()),
            ("lstm.b_i", self.lstm.b_i.as_slice()),
            ("lstm.w_f", self.lstm.w_f.data.as_slice()),
            ("lstm.u_f", self.lstm.u_f.data.as_slice()),
            ("lstm.b_f", self.lstm.b_f.as_slice()),
            ("lstm.w_g", self.lstm.w_g.data.as_slice()),
            ("lstm.u_g", self.lstm.u_g.data.as_slice()),
            ("lstm.b_g", self.lstm.b_g.as_slice()),
            ("lstm.w_o", self.lstm.w_o.data.as_slice()),
            ("lstm.u_o", self.lstm.u_o.data.as_slice()),
            ("lstm.b_o", self.lstm.b_o.as_slice()),
            ("dense.w1", self.dense.w1.data.as_slice()),
            ("dense.b1", self.dense.b1.as_slice()),
            ("dense.w2", self.dense.w2.data.as_slice()),
            ("dense.b2", self.dense.b2.as_slice()),
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("lstm.w_i", self.lstm.w_i.data.as_mut_slice()),
            ("lstm.u_i", self.lstm.u_i.data.as_mut_slice()),
            ("lstm.b_i", self.lstm.b_i.as_mut_slice()),
            ("lstm.w_f", self.lstm.w_f.data.as_mut_slice()),
            ("lstm.u_f", self.lstm.u_f.data.as_mut_slice()),
            ("lstm.b_f", self.lstm.b_f.as_mut_slice()),
            ("lstm.w_g", self.lstm.w_g.data.as_mut_slice()),
            ("lstm.u_g", self.lstm.u_g.data.as_mut_slice()),
            ("lstm.b_g", self.lstm.b_g.as_mut_slice()),
            ("lstm.w_o", self.lstm.w_o.data.as_mut_slice()),
            ("lstm.u_o", self.lstm.u_o.data.as_mut_slice()),
            ("lstm.b_o", self.lstm.b_o.as_mut_slice()),
            ("dense.w1", self.dense.w1.data.as_mut_slice()),
            ("dense.b1", self.dense.b1.as_mut_slice()),
            ("dense.w2", self.dense.w2.data.as_mut_slice()),
            ("dense.b2", self.dense.b2.as_mut_slice()),
        ]
    }
}
