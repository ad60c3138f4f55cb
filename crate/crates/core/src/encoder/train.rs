use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::objective::{loss_and_grad, Batch, BatchItem, LossWeights, ObjectiveOptions};
use super::optim::{default_warmup, learning_rate, AdamW, AdamWConfig};
use super::params::{EncoderParams, ModelDims};
use super::vocab::{Vocab, DEFAULT_MAX_VOCAB};
use crate::corpus::SampleRecord;
use crate::error::{Error, Result};
use crate::par::ExecMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// `None` selects min(1000, total_steps / 10).
    pub warmup: Option<usize>,
    pub weights: LossWeights,
    pub seed: u64,
    pub optimizer: AdamWConfig,
    pub objective: ObjectiveOptions,
    pub embed_dim: usize,
    pub joint_dim: usize,
    /// Image-side hidden width, 0 for a single projection.
    pub hidden_dim: usize,
    pub max_vocab: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 16,
            batch_size: 64,
            lr: 3e-3,
            warmup: None,
            weights: LossWeights::default(),
            seed: 7,
            optimizer: AdamWConfig::default(),
            objective: ObjectiveOptions::default(),
            embed_dim: 64,
            joint_dim: 64,
            hidden_dim: 0,
            max_vocab: DEFAULT_MAX_VOCAB,
        }
    }
}

impl TrainConfig {
    pub fn steps_per_epoch(&self, records: usize) -> usize {
        let full = records / self.batch_size;
        // A trailing partial batch is kept when it has at least two items.
        full + usize::from(records % self.batch_size >= 2)
    }

    pub fn total_steps(&self, records: usize) -> usize {
        self.epochs * self.steps_per_epoch(records)
    }

    pub fn warmup_steps(&self, records: usize) -> usize {
        self.warmup.unwrap_or_else(|| default_warmup(self.total_steps(records)))
    }
}

/// Trained (or freshly initialized) encoder with its vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub params: EncoderParams,
    pub vocab: Vocab,
}

impl Model {
    /// Builds the vocabulary from the records' captions and initializes
    /// parameters from `config.seed`.
    pub fn init(config: &TrainConfig, records: &[SampleRecord]) -> Result<Self> {
        let first = records.first().ok_or_else(|| Error::InvalidBatch("empty training corpus".into()))?;
        let image = first
            .image_ref
            .features()
            .ok_or_else(|| Error::InvalidBatch(format!("{}: image is not embedded", first.sample_id)))?
            .dim();
        let vocab = Vocab::build(records.iter().flat_map(|r| r.options()), config.max_vocab);
        let dims = ModelDims {
            vocab: vocab.len(),
            embed: config.embed_dim,
            image,
            hidden: config.hidden_dim,
            joint: config.joint_dim,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Model { params: EncoderParams::init(dims, &mut rng), vocab })
    }

    pub fn embed_text(&self, text: &str) -> Result<Vec<f64>> {
        self.params.encode_text(&self.vocab.encode(text)?)
    }

    /// Logic-head scores for a caption, one per category.
    pub fn logic_scores(&self, text: &str) -> Result<Vec<f64>> {
        let cache = self.params.encode_text_cached(&self.vocab.encode(text)?)?;
        Ok(self.params.logic_scores(&cache.feature))
    }

    pub fn embed_image(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.params.encode_image(features)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: usize,
    pub epoch: usize,
    pub l_clip: f64,
    pub l_mc: f64,
    pub l_logic: f64,
    pub l_total: f64,
    pub grad_norm: f64,
    pub lr: f64,
    pub tau: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub log: Vec<StepLog>,
}

pub fn train(config: &TrainConfig, records: &[SampleRecord], mode: ExecMode) -> Result<TrainOutcome> {
    train_with(config, records, mode, |_| {})
}

/// Trains from scratch, calling `on_step` after every update.
pub fn train_with(
    config: &TrainConfig,
    records: &[SampleRecord],
    mode: ExecMode,
    mut on_step: impl FnMut(&StepLog),
) -> Result<TrainOutcome> {
    if config.batch_size < 2 {
        return Err(Error::Config("batch_size must be at least 2".into()));
    }
    if !(config.lr.is_finite() && config.lr > 0.0) {
        return Err(Error::Config(format!("learning rate must be positive, got {}", config.lr)));
    }
    let mut model = Model::init(config, records)?;
    let items: Vec<BatchItem> = Batch::from_records(records, &model.vocab)?.items;
    let warmup = config.warmup_steps(records.len());
    let mut opt = AdamW::new(config.optimizer, &model.params);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5348_5546_464c_4521);
    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut log = Vec::with_capacity(config.total_steps(records.len()));
    let mut step = 0;

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(config.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            let batch = Batch { items: chunk.iter().map(|&i| items[i].clone()).collect() };
            let (loss, grad) =
                loss_and_grad(&model.params, &batch, &config.weights, &config.objective, mode)?;
            let lr = learning_rate(step, config.lr, warmup);
            let entry = StepLog {
                step,
                epoch,
                l_clip: loss.l_clip,
                l_mc: loss.l_mc,
                l_logic: loss.l_logic,
                l_total: loss.l_total,
                grad_norm: loss.grad_norm,
                lr,
                tau: loss.tau,
            };
            if !(loss.l_total.is_finite() && loss.grad_norm.is_finite()) {
                return Err(Error::NonFinite {
                    step,
                    diagnostics: serde_json::to_string(&entry).unwrap_or_default(),
                });
            }
            opt.step(&mut model.params, &grad, lr);
            if !model.params.is_finite() {
                return Err(Error::NonFinite {
                    step,
                    diagnostics: format!("parameters non-finite after update; {}", serde_json::to_string(&entry).unwrap_or_default()),
                });
            }
            on_step(&entry);
            log.push(entry);
            step += 1;
        }
    }
    Ok(TrainOutcome { model, log })
}
