//! Forward pass with cached activations and exact reverse-mode gradients
//! through the unrolled sequence.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{sigmoid, tanh};

use super::weights::ZoneWeights;

/// Per-timestep activations kept for backpropagation.
pub(crate) struct StepCache {
    pub x: f64,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

pub(crate) struct ForwardCache {
    pub steps: Vec<StepCache>,
    pub z1: Vec<f64>,
    pub a1: Vec<f64>,
    pub out: [f64; 2],
}

/// Unroll the LSTM over `seq` (one scalar feature per timestep), then apply
/// the dense head. `seq` is expected to be normalized already.
pub(crate) fn forward(weights: &ZoneWeights, seq: &[f64]) -> Result<ForwardCache> {
    let hidden = weights.hidden();
    let lstm = &weights.lstm;
    let mut h = vec![0.0; hidden];
    let mut c = vec![0.0; hidden];
    let mut steps = Vec::with_capacity(seq.len());

    for &x in seq {
        let gate = |w: &crate::matrix::Matrix, u: &crate::matrix::Matrix, b: &[f64]| -> Result<Vec<f64>> {
            let uh = u.matvec(&h)?;
            Ok((0..hidden).map(|j| w.get(j, 0) * x + uh[j] + b[j]).collect())
        };
        let a_i = gate(&lstm.w_i, &lstm.u_i, &lstm.b_i)?;
        let a_f = gate(&lstm.w_f, &lstm.u_f, &lstm.b_f)?;
        let a_g = gate(&lstm.w_g, &lstm.u_g, &lstm.b_g)?;
        let a_o = gate(&lstm.w_o, &lstm.u_o, &lstm.b_o)?;

        let i_gate: Vec<f64> = a_i.iter().map(|&v| sigmoid(v)).collect();
        let f_gate: Vec<f64> = a_f.iter().map(|&v| sigmoid(v)).collect();
        let g_gate: Vec<f64> = a_g.iter().map(|&v| tanh(v)).collect();
        let o_gate: Vec<f64> = a_o.iter().map(|&v| sigmoid(v)).collect();

        let c_next: Vec<f64> = (0..hidden)
            .map(|j| f_gate[j] * c[j] + i_gate[j] * g_gate[j])
            .collect();
        let tanh_c: Vec<f64> = c_next.iter().map(|&v| tanh(v)).collect();
        let h_next: Vec<f64> = (0..hidden).map(|j| o_gate[j] * tanh_c[j]).collect();

        steps.push(StepCache {
            x,
            i: i_gate,
            f: f_gate,
            g: g_gate,
            o: o_gate,
            c: c_next.clone(),
            tanh_c,
            h: h_next.clone(),
        });
        h = h_next;
        c = c_next;
    }

    let dense = &weights.dense;
    let mut z1 = dense.w1.matvec(&h)?;
    for (z, b) in z1.iter_mut().zip(&dense.b1) {
        *z += b;
    }
    let a1: Vec<f64> = z1.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
    let mut out_v = dense.w2.matvec(&a1)?;
    for (z, b) in out_v.iter_mut().zip(&dense.b2) {
        *z += b;
    }
    let out = [out_v[0], out_v[1]];
    if !out[0].is_finite() || !out[1].is_finite() {
        return Err(Error::Domain("non-finite activation in forward pass".to_string()));
    }

    Ok(ForwardCache { steps, z1, a1, out })
}

/// Accumulate gradients for one sample into `grads`, given the loss gradient
/// `dout` at the network output.
pub(crate) fn backward_into(
    weights: &ZoneWeights,
    cache: &ForwardCache,
    dout: [f64; 2],
    grads: &mut ZoneWeights,
) -> Result<()> {
    let hidden = weights.hidden();
    let dense = &weights.dense;
    let steps = &cache.steps;
    let h_final: &[f64] = steps
        .last()
        .map(|s| s.h.as_slice())
        .unwrap_or(&[]);

    // dense head
    for (slot, d) in grads.dense.b2.iter_mut().zip(dout) {
        *slot += d;
    }
    grads.dense.w2.add_outer(&dout, &cache.a1);
    let da1 = dense.w2.matvec_transposed(&dout)?;
    let dz1: Vec<f64> = da1
        .iter()
        .zip(&cache.z1)
        .map(|(&d, &z)| if z > 0.0 { d } else { 0.0 })
        .collect();
    for (slot, d) in grads.dense.b1.iter_mut().zip(&dz1) {
        *slot += d;
    }
    if !h_final.is_empty() {
        grads.dense.w1.add_outer(&dz1, h_final);
    }

    // backpropagation through time
    let mut dh = dense.w1.matvec_transposed(&dz1)?;
    let mut dc = vec![0.0; hidden];
    let lstm = &weights.lstm;

    for (t, step) in steps.iter().enumerate().rev() {
        let c_prev: Vec<f64> = if t > 0 {
            steps[t - 1].c.clone()
        } else {
            vec![0.0; hidden]
        };
        let h_prev: Vec<f64> = if t > 0 {
            steps[t - 1].h.clone()
        } else {
            vec![0.0; hidden]
        };

        let mut da_i = vec![0.0; hidden];
        let mut da_f = vec![0.0; hidden];
        let mut da_g = vec![0.0; hidden];
        let mut da_o = vec![0.0; hidden];
        for j in 0..hidden {
            let dcj = dc[j] + dh[j] * step.o[j] * (1.0 - step.tanh_c[j] * step.tanh_c[j]);
            let do_j = dh[j] * step.tanh_c[j];
            da_o[j] = do_j * step.o[j] * (1.0 - step.o[j]);
            da_i[j] = dcj * step.g[j] * step.i[j] * (1.0 - step.i[j]);
            da_g[j] = dcj * step.i[j] * (1.0 - step.g[j] * step.g[j]);
            da_f[j] = dcj * c_prev[j] * step.f[j] * (1.0 - step.f[j]);
            dc[j] = dcj * step.f[j];
        }

        let gl = &mut grads.lstm;
        for j in 0..hidden {
            gl.w_i.data[j] += da_i[j] * step.x;
            gl.w_f.data[j] += da_f[j] * step.x;
            gl.w_g.data[j] += da_g[j] * step.x;
            gl.w_o.data[j] += da_o[j] * step.x;
            gl.b_i[j] += da_i[j];
            gl.b_f[j] += da_f[j];
            gl.b_g[j] += da_g[j];
            gl.b_o[j] += da_o[j];
        }
        gl.u_i.add_outer(&da_i, &h_prev);
        gl.u_f.add_outer(&da_f, &h_prev);
        gl.u_g.add_outer(&da_g, &h_prev);
        gl.u_o.add_outer(&da_o, &h_prev);

        let mut dh_prev = lstm.u_i.matvec_transposed(&da_i)?;
        for (acc, v) in dh_prev.iter_mut().zip(lstm.u_f.matvec_transposed(&da_f)?) {
            *acc += v;
        }
        for (acc, v) in dh_prev.iter_mut().zip(lstm.u_g.matvec_transposed(&da_g)?) {
            *acc += v;
        }
        for (acc, v) in dh_prev.iter_mut().zip(lstm.u_o.matvec_transposed(&da_o)?) {
            *acc += v;
        }
        dh = dh_prev;
    }
    Ok(())
}
