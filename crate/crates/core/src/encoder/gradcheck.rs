//! Central finite-difference check of the analytic gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::objective::{loss_and_grad, loss_total, Batch, BatchItem, LossWeights, ObjectiveOptions};
use super::params::{EncoderParams, ModelDims, TENSOR_NAMES};
use crate::error::Result;
use crate::par::ExecMode;
use crate::taxonomy::LogicalCategory;

/// Denominator floor for the relative error, so elements whose true
/// gradient is zero up to rounding are compared in absolute terms.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// Tensor name and flat index of the worst element.
    pub worst: (&'static str, usize),
    pub checked: usize,
}

pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Compares every parameter element's analytic gradient to a central
/// difference with step `h`.
pub fn check_gradient(
    params: &EncoderParams,
    batch: &Batch,
    weights: &LossWeights,
    opts: &ObjectiveOptions,
    h: f64,
) -> Result<GradCheck> {
    let (_, grad) = loss_and_grad(params, batch, weights, opts, ExecMode::Sequential)?;
    let mut probe = params.clone();
    let mut out = GradCheck { max_rel_error: 0.0, max_abs_error: 0.0, worst: (TENSOR_NAMES[0], 0), checked: 0 };
    for k in 0..TENSOR_NAMES.len() {
        for idx in 0..params.tensors()[k].data.len() {
            let x = params.tensors()[k].data[idx];
            probe.tensors_mut()[k].data[idx] = x + h;
            let up = loss_total(&probe, batch, weights, opts)?.l_total;
            probe.tensors_mut()[k].data[idx] = x - h;
            let down = loss_total(&probe, batch, weights, opts)?.l_total;
            probe.tensors_mut()[k].data[idx] = x;
            let numeric = (up - down) / (2.0 * h);
            let analytic = grad.tensors()[k].data[idx];
            let rel = rel_error(analytic, numeric);
            out.max_abs_error = out.max_abs_error.max((analytic - numeric).abs());
            if rel > out.max_rel_error {
                out.max_rel_error = rel;
                out.worst = (TENSOR_NAMES[k], idx);
            }
            out.checked += 1;
        }
    }
    Ok(out)
}

/// A random small problem: parameters, a batch of `n` items with 4 or 5
/// options, random multi-hot labels, and τ kept away from its clamp bounds.
pub fn random_instance(seed: u64, n: usize, joint: usize, image: usize) -> (EncoderParams, Batch) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = 12;
    let hidden = if rng.gen_bool(0.5) { 5 } else { 0 };
    let dims = ModelDims { vocab, embed: joint, image, hidden, joint };
    let mut params = EncoderParams::init(dims, &mut rng);
    params.log_temperature.data[0] = rng.gen_range(0.05f64.ln()..2f64.ln());
    let items = (0..n)
        .map(|_| {
            let options = if rng.gen_bool(0.25) { 5 } else { 4 };
            let image_vec: Vec<f64> = (0..image).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let captions: Vec<Vec<usize>> = (0..options)
                .map(|_| (0..rng.gen_range(1..=6)).map(|_| rng.gen_range(0..vocab)).collect())
                .collect();
            let labels = (0..options)
                .map(|_| {
                    let mut y = [0.0; LogicalCategory::COUNT];
                    y.iter_mut().for_each(|v| *v = if rng.gen_bool(0.3) { 1.0 } else { 0.0 });
                    y
                })
                .collect();
            BatchItem { image: image_vec, captions, labels }
        })
        .collect();
    (params, Batch { items })
}
