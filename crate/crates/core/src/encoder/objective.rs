//! The weighted training objective and its analytic gradient.
//!
//! A step runs in four phases: per-item forward (parallel), the batch
//! losses and their gradients with respect to embeddings (sequential),
//! per-item backward (parallel), and an index-ordered reduction. The result
//! is bit-identical in parallel and sequential mode.

use serde::{Deserialize, Serialize};

use super::loss::{clip_from_logits, clip_rows_from_logits, cross_entropy, logic_from_scores};
use super::params::{dot, EncoderParams, ImageCache, ImageGrad, TextCache, TextGrad};
use super::vocab::Vocab;
use crate::corpus::SampleRecord;
use crate::error::{Error, Result};
use crate::par::{self, ExecMode};
use crate::taxonomy::{detect_categories, LogicalCategory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { alpha: 4.0, beta: 2.0, gamma: 1.0 }
    }
}

impl LossWeights {
    pub fn combine(&self, clip: f64, mc: f64, logic: f64) -> f64 {
        self.alpha * clip + self.beta * mc + self.gamma * logic
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectiveOptions {
    /// Fix τ = 1, so logits are raw cosines.
    pub raw_cosine: bool,
    /// Append negatives as extra text columns in the contrastive loss
    /// (image-to-text direction only).
    pub clip_negatives: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_clip: f64,
    pub l_mc: f64,
    pub l_logic: f64,
    pub l_total: f64,
    pub grad_norm: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchItem {
    pub image: Vec<f64>,
    /// Token ids per option, positive first.
    pub captions: Vec<Vec<usize>>,
    /// Logic-head targets per option.
    pub labels: Vec<[f64; LogicalCategory::COUNT]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub items: Vec<BatchItem>,
}

impl Batch {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a SampleRecord>, vocab: &Vocab) -> Result<Self> {
        let items = records
            .into_iter()
            .map(|r| {
                let image = r
                    .image_ref
                    .features()
                    .ok_or_else(|| Error::InvalidBatch(format!("{}: image is not embedded", r.sample_id)))?
                    .values()
                    .to_vec();
                let options = r.options();
                let captions = options.iter().map(|c| vocab.encode(c)).collect::<Result<Vec<_>>>()?;
                let labels = options.iter().map(|c| detect_categories(c).as_targets()).collect();
                Ok(BatchItem { image, captions, labels })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Batch { items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    fn validate(&self) -> Result<()> {
        if self.items.len() < 2 {
            return Err(Error::InvalidBatch(format!("need at least 2 items, got {}", self.items.len())));
        }
        for (i, item) in self.items.iter().enumerate() {
            if item.captions.len() < 2 || item.captions.len() != item.labels.len() {
                return Err(Error::InvalidBatch(format!("item {i}: needs ≥ 2 options with labels")));
            }
        }
        Ok(())
    }
}

struct Forward {
    image: ImageCache,
    texts: Vec<TextCache>,
}

struct ItemGrad {
    text: TextGrad,
    image: ImageGrad,
}

fn check_weights(w: &LossWeights) -> Result<()> {
    if [w.alpha, w.beta, w.gamma].iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::Config(format!("loss weights must be finite and non-negative: {w:?}")));
    }
    Ok(())
}

/// Loss components and the full parameter gradient.
pub fn loss_and_grad(
    params: &EncoderParams,
    batch: &Batch,
    weights: &LossWeights,
    opts: &ObjectiveOptions,
    mode: ExecMode,
) -> Result<(LossBreakdown, EncoderParams)> {
    evaluate(params, batch, weights, opts, mode, true)
}

fn evaluate(
    params: &EncoderParams,
    batch: &Batch,
    weights: &LossWeights,
    opts: &ObjectiveOptions,
    mode: ExecMode,
    want_grad: bool,
) -> Result<(LossBreakdown, EncoderParams)> {
    check_weights(weights)?;
    batch.validate()?;
    let n = batch.len();

    let forward: Vec<Forward> = par::map(mode, &batch.items, |item| {
        Ok(Forward {
            image: params.encode_image_cached(&item.image)?,
            texts: item.captions.iter().map(|c| params.encode_text_cached(c)).collect::<Result<_>>()?,
        })
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let tau = params.temperature(opts.raw_cosine);
    let mut g_v: Vec<Vec<f64>> = vec![vec![0.0; params.dims.joint]; n];
    let mut g_t: Vec<Vec<Vec<f64>>> =
        forward.iter().map(|f| vec![vec![0.0; params.dims.joint]; f.texts.len()]).collect();
    let mut g_f = g_t.clone();
    // dL/dτ, before the chain through log τ.
    let mut g_tau = 0.0;

    // Contrastive term.
    let (columns, targets): (Vec<(usize, usize)>, Vec<usize>) = if opts.clip_negatives {
        let mut cols = Vec::new();
        let mut targets = Vec::new();
        for (i, f) in forward.iter().enumerate() {
            targets.push(cols.len());
            cols.extend((0..f.texts.len()).map(|m| (i, m)));
        }
        (cols, targets)
    } else {
        ((0..n).map(|i| (i, 0)).collect(), (0..n).collect())
    };
    let sims: Vec<Vec<f64>> = forward
        .iter()
        .map(|f| columns.iter().map(|&(j, m)| dot(&f.image.out, &forward[j].texts[m].out)).collect())
        .collect();
    let logits: Vec<Vec<f64>> = sims.iter().map(|r| r.iter().map(|s| s / tau).collect()).collect();
    let (l_clip, g_logits) =
        if opts.clip_negatives { clip_rows_from_logits(&logits, &targets) } else { clip_from_logits(&logits) };
    for i in 0..n {
        for (c, &(j, m)) in columns.iter().enumerate() {
            let g = weights.alpha * g_logits[i][c];
            if g == 0.0 || !want_grad {
                continue;
            }
            let (vi, tj) = (&forward[i].image.out, &forward[j].texts[m].out);
            for k in 0..vi.len() {
                g_v[i][k] += g * tj[k] / tau;
                g_t[j][m][k] += g * vi[k] / tau;
            }
            g_tau -= g * sims[i][c] / (tau * tau);
        }
    }

    // Multiple-choice term.
    let mut l_mc = 0.0;
    for (i, f) in forward.iter().enumerate() {
        let cos: Vec<f64> = f.texts.iter().map(|t| dot(&f.image.out, &t.out)).collect();
        let mc_logits: Vec<f64> = cos.iter().map(|c| c / tau).collect();
        let (l, g) = cross_entropy(&mc_logits, 0);
        l_mc += l;
        for (m, gm) in g.iter().enumerate() {
            let gm = weights.beta * gm / n as f64;
            if gm == 0.0 || !want_grad {
                continue;
            }
            let (vi, tm) = (&f.image.out, &f.texts[m].out);
            for k in 0..vi.len() {
                g_v[i][k] += gm * tm[k] / tau;
                g_t[i][m][k] += gm * vi[k] / tau;
            }
            g_tau -= gm * cos[m] / (tau * tau);
        }
    }
    l_mc /= n as f64;

    // Logic-head term over every caption.
    let mut grad = params.zeros_like();
    let captions: usize = forward.iter().map(|f| f.texts.len()).sum();
    let mut l_logic = 0.0;
    for (i, f) in forward.iter().enumerate() {
        for (m, t) in f.texts.iter().enumerate() {
            let scores = params.logic_scores(&t.feature);
            let (l, g) = logic_from_scores(&scores, &batch.items[i].labels[m]);
            l_logic += l;
            if !want_grad {
                continue;
            }
            let g: Vec<f64> = g.iter().map(|v| weights.gamma * v / captions as f64).collect();
            grad.logic_weight.add_outer(&t.feature, &g);
            grad.logic_bias.add_vec(&g);
            for (dst, w) in g_f[i][m].iter_mut().zip(params.logic_weight.mat_vec(&g)) {
                *dst += w;
            }
        }
    }
    l_logic /= captions as f64;

    if !want_grad {
        let breakdown = LossBreakdown {
            l_clip,
            l_mc,
            l_logic,
            l_total: weights.combine(l_clip, l_mc, l_logic),
            grad_norm: 0.0,
            tau,
        };
        return Ok((breakdown, grad));
    }

    let item_grads: Vec<ItemGrad> = par::map_range(mode, n, |i| {
        let f = &forward[i];
        let mut text = TextGrad::new(params);
        for (m, cache) in f.texts.iter().enumerate() {
            params.text_backward(cache, &g_t[i][m], &g_f[i][m], &mut text);
        }
        let mut image = ImageGrad::new(params);
        params.image_backward(&batch.items[i].image, &f.image, &g_v[i], &mut image);
        ItemGrad { text, image }
    });

    for ig in &item_grads {
        grad.text_weight.add_assign(&ig.text.weight);
        grad.text_bias.add_assign(&ig.text.bias);
        for (id, row) in &ig.text.tokens {
            for (dst, v) in grad.token_embeddings.row_mut(*id).iter_mut().zip(row) {
                *dst += v;
            }
        }
        grad.image_hidden_weight.add_assign(&ig.image.hidden_weight);
        grad.image_hidden_bias.add_assign(&ig.image.hidden_bias);
        grad.image_weight.add_assign(&ig.image.weight);
        grad.image_bias.add_assign(&ig.image.bias);
    }
    grad.log_temperature.data[0] = g_tau * params.temperature_slope(opts.raw_cosine);

    let breakdown = LossBreakdown {
        l_clip,
        l_mc,
        l_logic,
        l_total: weights.combine(l_clip, l_mc, l_logic),
        grad_norm: grad.l2_norm(),
        tau,
    };
    Ok((breakdown, grad))
}

/// Loss components only; `grad_norm` is reported as 0.
pub fn loss_total(
    params: &EncoderParams,
    batch: &Batch,
    weights: &LossWeights,
    opts: &ObjectiveOptions,
) -> Result<LossBreakdown> {
    Ok(evaluate(params, batch, weights, opts, ExecMode::Sequential, false)?.0)
}
