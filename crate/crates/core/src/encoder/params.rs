use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taxonomy::LogicalCategory;

/// Dense row-major tensor of rank 0, 1 or 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor { shape: shape.to_vec(), data: vec![0.0; shape.iter().product()] }
    }

    pub fn scalar(value: f64) -> Self {
        Tensor { shape: vec![], data: vec![value] }
    }

    pub fn uniform(shape: &[usize], bound: f64, rng: &mut impl Rng) -> Self {
        let n = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: (0..n).map(|_| rng.gen_range(-bound..bound)).collect() }
    }

    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(1)
    }

    pub fn cols(&self) -> usize {
        self.shape.get(1).copied().unwrap_or(1)
    }

    pub fn is_matrix(&self) -> bool {
        self.shape.len() == 2
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[r * c..(r + 1) * c]
    }

    /// `xᵀ W + b` for `W` of shape (rows, cols).
    pub fn affine(&self, x: &[f64], bias: &Tensor) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows());
        let mut out = bias.data.clone();
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(self.row(i)) {
                *o += xi * w;
            }
        }
        out
    }

    /// `W g` for `W` of shape (rows, cols) and `g` of length cols.
    pub fn mat_vec(&self, g: &[f64]) -> Vec<f64> {
        (0..self.rows()).map(|i| dot(self.row(i), g)).collect()
    }

    /// `self += x gᵀ`
    pub fn add_outer(&mut self, x: &[f64], g: &[f64]) {
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (w, gj) in self.row_mut(i).iter_mut().zip(g) {
                *w += xi * gj;
            }
        }
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn add_vec(&mut self, g: &[f64]) {
        for (a, b) in self.data.iter_mut().zip(g) {
            *a += b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub const MIN_TEMPERATURE: f64 = 0.01;
pub const MAX_TEMPERATURE: f64 = 100.0;
pub const INIT_TEMPERATURE: f64 = 0.07;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub vocab: usize,
    /// Token embedding width.
    pub embed: usize,
    pub image: usize,
    /// Width of the optional tanh layer on the image side; 0 disables it.
    pub hidden: usize,
    /// Joint embedding width.
    pub joint: usize,
}

impl ModelDims {
    pub fn new(vocab: usize, image: usize) -> Self {
        ModelDims { vocab, embed: 64, image, hidden: 0, joint: 64 }
    }

    /// Tensor shapes in [`TENSOR_NAMES`] order.
    pub fn shapes(&self) -> [Vec<usize>; 10] {
        let ModelDims { vocab, embed, image, hidden, joint } = *self;
        let proj_in = if hidden > 0 { hidden } else { image };
        let k = LogicalCategory::COUNT;
        [
            vec![vocab, embed],
            vec![embed, joint],
            vec![joint],
            vec![image, hidden],
            vec![hidden],
            vec![proj_in, joint],
            vec![joint],
            vec![joint, k],
            vec![k],
            vec![],
        ]
    }
}

/// All learnable tensors. Gradients use the same type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub dims: ModelDims,
    pub token_embeddings: Tensor,
    pub text_weight: Tensor,
    pub text_bias: Tensor,
    pub image_hidden_weight: Tensor,
    pub image_hidden_bias: Tensor,
    pub image_weight: Tensor,
    pub image_bias: Tensor,
    pub logic_weight: Tensor,
    pub logic_bias: Tensor,
    pub log_temperature: Tensor,
}

pub const TENSOR_NAMES: [&str; 10] = [
    "token_embeddings",
    "text_projection.weight",
    "text_projection.bias",
    "image_hidden.weight",
    "image_hidden.bias",
    "image_projection.weight",
    "image_projection.bias",
    "logic_head.weight",
    "logic_head.bias",
    "log_temperature",
];

impl EncoderParams {
    /// Uniform ±1/sqrt(fan_in) initialization, τ = 0.07.
    pub fn init(dims: ModelDims, rng: &mut impl Rng) -> Self {
        let ModelDims { vocab, embed, image, hidden, joint } = dims;
        let b = |fan_in: usize| 1.0 / (fan_in as f64).sqrt();
        let proj_in = if hidden > 0 { hidden } else { image };
        EncoderParams {
            dims,
            // Unit variance, like a standard embedding table.
            token_embeddings: Tensor::uniform(&[vocab, embed], 3f64.sqrt(), rng),
            text_weight: Tensor::uniform(&[embed, joint], b(embed), rng),
            text_bias: Tensor::uniform(&[joint], b(embed), rng),
            image_hidden_weight: Tensor::uniform(&[image, hidden], b(image), rng),
            image_hidden_bias: Tensor::uniform(&[hidden], b(image), rng),
            image_weight: Tensor::uniform(&[proj_in, joint], b(proj_in), rng),
            image_bias: Tensor::uniform(&[joint], b(proj_in), rng),
            logic_weight: Tensor::uniform(&[joint, LogicalCategory::COUNT], b(joint), rng),
            logic_bias: Tensor::uniform(&[LogicalCategory::COUNT], b(joint), rng),
            log_temperature: Tensor::scalar(INIT_TEMPERATURE.ln()),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let z = |t: &Tensor| Tensor::zeros(&t.shape);
        EncoderParams {
            dims: self.dims,
            token_embeddings: z(&self.token_embeddings),
            text_weight: z(&self.text_weight),
            text_bias: z(&self.text_bias),
            image_hidden_weight: z(&self.image_hidden_weight),
            image_hidden_bias: z(&self.image_hidden_bias),
            image_weight: z(&self.image_weight),
            image_bias: z(&self.image_bias),
            logic_weight: z(&self.logic_weight),
            logic_bias: z(&self.logic_bias),
            log_temperature: z(&self.log_temperature),
        }
    }

    /// Tensors in [`TENSOR_NAMES`] order.
    pub fn tensors(&self) -> [&Tensor; 10] {
        [
            &self.token_embeddings,
            &self.text_weight,
            &self.text_bias,
            &self.image_hidden_weight,
            &self.image_hidden_bias,
            &self.image_weight,
            &self.image_bias,
            &self.logic_weight,
            &self.logic_bias,
            &self.log_temperature,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor; 10] {
        [
            &mut self.token_embeddings,
            &mut self.text_weight,
            &mut self.text_bias,
            &mut self.image_hidden_weight,
            &mut self.image_hidden_bias,
            &mut self.image_weight,
            &mut self.image_bias,
            &mut self.logic_weight,
            &mut self.logic_bias,
            &mut self.log_temperature,
        ]
    }

    pub fn named(&self) -> impl Iterator<Item = (&'static str, &Tensor)> {
        TENSOR_NAMES.into_iter().zip(self.tensors())
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    pub fn l2_norm(&self) -> f64 {
        self.tensors().iter().flat_map(|t| t.data.iter()).map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Clamped temperature, or 1 when `raw_cosine`.
    pub fn temperature(&self, raw_cosine: bool) -> f64 {
        if raw_cosine {
            1.0
        } else {
            self.log_temperature.data[0].exp().clamp(MIN_TEMPERATURE, MAX_TEMPERATURE)
        }
    }

    /// dτ/d(log τ): τ inside the clamp range, 0 on the boundary or when fixed.
    pub fn temperature_slope(&self, raw_cosine: bool) -> f64 {
        let t = self.log_temperature.data[0].exp();
        if raw_cosine || !(MIN_TEMPERATURE..=MAX_TEMPERATURE).contains(&t) {
            0.0
        } else {
            t
        }
    }

    pub(crate) fn check_image(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dims.image {
            return Err(Error::DimensionMismatch { expected: self.dims.image, got: x.len() });
        }
        Ok(())
    }
}

/// Intermediate values of one text encoding, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct TextCache {
    /// Token ids sorted ascending.
    pub ids: Vec<usize>,
    pub mean: Vec<f64>,
    /// Projected feature before normalization; the logic head reads this.
    pub feature: Vec<f64>,
    pub norm: f64,
    pub out: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ImageCache {
    pub hidden: Option<Vec<f64>>,
    pub norm: f64,
    pub out: Vec<f64>,
}

fn normalize(z: Vec<f64>) -> (f64, Vec<f64>) {
    let n = norm(&z);
    (n, z.into_iter().map(|v| v / n).collect())
}

/// Backward through `t = z / ‖z‖`.
pub(crate) fn normalize_backward(out: &[f64], norm: f64, g: &[f64]) -> Vec<f64> {
    let tg = dot(out, g);
    out.iter().zip(g).map(|(t, gi)| (gi - t * tg) / norm).collect()
}

impl EncoderParams {
    pub fn encode_text_cached(&self, ids: &[usize]) -> Result<TextCache> {
        if ids.is_empty() {
            return Err(Error::EmptyCaption);
        }
        if let Some(&bad) = ids.iter().find(|&&i| i >= self.dims.vocab) {
            return Err(Error::InvalidBatch(format!("token id {bad} outside vocabulary of {}", self.dims.vocab)));
        }
        // Sorted so the sum, and therefore the output, is order-independent bit for bit.
        let mut ids = ids.to_vec();
        ids.sort_unstable();
        let mut mean = vec![0.0; self.dims.embed];
        for &id in &ids {
            for (m, e) in mean.iter_mut().zip(self.token_embeddings.row(id)) {
                *m += e;
            }
        }
        let n = ids.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        let feature = self.text_weight.affine(&mean, &self.text_bias);
        let (norm, out) = normalize(feature.clone());
        Ok(TextCache { ids, mean, feature, norm, out })
    }

    pub fn encode_text(&self, ids: &[usize]) -> Result<Vec<f64>> {
        Ok(self.encode_text_cached(ids)?.out)
    }

    pub fn encode_image_cached(&self, x: &[f64]) -> Result<ImageCache> {
        self.check_image(x)?;
        let hidden = (self.dims.hidden > 0).then(|| {
            let mut h = self.image_hidden_weight.affine(x, &self.image_hidden_bias);
            h.iter_mut().for_each(|v| *v = v.tanh());
            h
        });
        let input = hidden.as_deref().unwrap_or(x);
        let (norm, out) = normalize(self.image_weight.affine(input, &self.image_bias));
        Ok(ImageCache { hidden, norm, out })
    }

    pub fn encode_image(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.encode_image_cached(x)?.out)
    }

    /// Raw logic-head scores for an unnormalized text feature.
    pub fn logic_scores(&self, feature: &[f64]) -> Vec<f64> {
        self.logic_weight.affine(feature, &self.logic_bias)
    }

    /// Accumulates into `grad` the parameter gradient of a text encoding
    /// whose unit output received upstream gradient `g` and whose
    /// unnormalized feature received `g_feature`.
    pub(crate) fn text_backward(&self, cache: &TextCache, g: &[f64], g_feature: &[f64], grad: &mut TextGrad) {
        let mut gz = normalize_backward(&cache.out, cache.norm, g);
        for (a, b) in gz.iter_mut().zip(g_feature) {
            *a += b;
        }
        grad.weight.add_outer(&cache.mean, &gz);
        grad.bias.add_vec(&gz);
        let ge = self.text_weight.mat_vec(&gz);
        let inv_n = 1.0 / cache.ids.len() as f64;
        for &id in &cache.ids {
            let row: Vec<f64> = ge.iter().map(|v| v * inv_n).collect();
            grad.tokens.push((id, row));
        }
    }

    pub(crate) fn image_backward(&self, x: &[f64], cache: &ImageCache, g: &[f64], grad: &mut ImageGrad) {
        let gz = normalize_backward(&cache.out, cache.norm, g);
        let input = cache.hidden.as_deref().unwrap_or(x);
        grad.weight.add_outer(input, &gz);
        grad.bias.add_vec(&gz);
        if let Some(h) = &cache.hidden {
            let gh = self.image_weight.mat_vec(&gz);
            let ga: Vec<f64> = gh.iter().zip(h).map(|(g, h)| g * (1.0 - h * h)).collect();
            grad.hidden_weight.add_outer(x, &ga);
            grad.hidden_bias.add_vec(&ga);
        }
    }
}

/// Text-side parameter gradient of one record; token rows kept sparse.
#[derive(Debug, Clone)]
pub(crate) struct TextGrad {
    pub weight: Tensor,
    pub bias: Tensor,
    pub tokens: Vec<(usize, Vec<f64>)>,
}

#[derive(Debug, Clone)]
pub(crate) struct ImageGrad {
    pub hidden_weight: Tensor,
    pub hidden_bias: Tensor,
    pub weight: Tensor,
    pub bias: Tensor,
}

impl TextGrad {
    pub fn new(p: &EncoderParams) -> Self {
        TextGrad { weight: Tensor::zeros(&p.text_weight.shape), bias: Tensor::zeros(&p.text_bias.shape), tokens: Vec::new() }
    }
}

impl ImageGrad {
    pub fn new(p: &EncoderParams) -> Self {
        ImageGrad {
            hidden_weight: Tensor::zeros(&p.image_hidden_weight.shape),
            hidden_bias: Tensor::zeros(&p.image_hidden_bias.shape),
            weight: Tensor::zeros(&p.image_weight.shape),
            bias: Tensor::zeros(&p.image_bias.shape),
        }
    }
}
