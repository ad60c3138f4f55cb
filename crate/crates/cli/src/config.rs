//! Run configuration (TOML, one section per command) and training presets.

use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use logicclip_core::corpus::{CorpusConfig, DEFAULT_IMAGE_DIM};
use logicclip_core::encoder::{LossWeights, TrainConfig};
use logicclip_core::eval::EvalConfig;
use logicclip_forge::{BackendProfile, RetryPolicy};

use crate::error::{CliError, Result};

pub const PRESETS: [&str; 5] = ["full", "variant1", "variant2", "variant3", "variant4"];

const FULL_WEIGHTS: LossWeights = LossWeights { alpha: 4.0, beta: 2.0, gamma: 4.0 };

/// Training configuration for a named preset. All presets share dimensions
/// and schedule and differ only in which loss terms are switched on:
/// `variant1` MC only, `variant2` logic only, `variant3` contrastive only,
/// `variant4` contrastive + MC, `full` all three.
pub fn preset(name: &str) -> Result<TrainConfig> {
    let LossWeights { alpha, beta, gamma } = FULL_WEIGHTS;
    let weights = match name {
        "full" => FULL_WEIGHTS,
        "variant1" => LossWeights { alpha: 0.0, beta, gamma: 0.0 },
        "variant2" => LossWeights { alpha: 0.0, beta: 0.0, gamma },
        "variant3" => LossWeights { alpha, beta: 0.0, gamma: 0.0 },
        "variant4" => LossWeights { alpha, beta, gamma: 0.0 },
        other => {
            return Err(CliError::Config(format!("unknown preset {other:?}; expected one of {}", PRESETS.join(", "))))
        }
    };
    Ok(TrainConfig { weights, embed_dim: 256, joint_dim: 256, ..TrainConfig::default() })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub synth: SynthSection,
    pub train: TrainSection,
    pub eval: EvalSection,
    pub forge: ForgeSection,
    pub serve: ServeSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub scenes: usize,
    pub seed: u64,
    pub start_index: u64,
    pub d_img: usize,
    /// image, video, anomaly, medicine
    pub scenario_weights: [f64; 4],
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection { scenes: 2000, seed: 7, start_index: 0, d_img: DEFAULT_IMAGE_DIM, scenario_weights: [1.0, 0.0, 0.0, 0.0] }
    }
}

impl SynthSection {
    pub fn corpus_config(&self) -> CorpusConfig {
        CorpusConfig {
            scenes: self.scenes,
            seed: self.seed,
            start_index: self.start_index,
            d_img: self.d_img,
            scenario_weights: self.scenario_weights,
            ..CorpusConfig::default()
        }
    }
}

/// A preset plus optional overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub preset: String,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub embed_dim: Option<usize>,
    pub joint_dim: Option<usize>,
    pub hidden_dim: Option<usize>,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            preset: "full".into(),
            epochs: None,
            batch_size: None,
            lr: None,
            seed: None,
            alpha: None,
            beta: None,
            gamma: None,
            embed_dim: None,
            joint_dim: None,
            hidden_dim: None,
        }
    }
}

impl TrainSection {
    pub fn resolve(&self) -> Result<TrainConfig> {
        let mut c = preset(&self.preset)?;
        c.epochs = self.epochs.unwrap_or(c.epochs);
        c.batch_size = self.batch_size.unwrap_or(c.batch_size);
        c.lr = self.lr.unwrap_or(c.lr);
        c.seed = self.seed.unwrap_or(c.seed);
        c.weights.alpha = self.alpha.unwrap_or(c.weights.alpha);
        c.weights.beta = self.beta.unwrap_or(c.weights.beta);
        c.weights.gamma = self.gamma.unwrap_or(c.weights.gamma);
        c.embed_dim = self.embed_dim.unwrap_or(c.embed_dim);
        c.joint_dim = self.joint_dim.unwrap_or(c.joint_dim);
        c.hidden_dim = self.hidden_dim.unwrap_or(c.hidden_dim);
        Ok(c)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub shuffle_seed: u64,
}

impl EvalSection {
    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig { shuffle_seed: self.shuffle_seed, ..EvalConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForgeSection {
    pub seed: u64,
    pub workers: usize,
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub backends: Vec<BackendProfile>,
}

impl Default for ForgeSection {
    fn default() -> Self {
        let policy = RetryPolicy::default();
        ForgeSection {
            seed: 0,
            workers: 4,
            max_attempts: policy.max_attempts,
            base_delay_ms: policy.base_delay.as_millis() as u64,
            backends: Vec::new(),
        }
    }
}

impl ForgeSection {
    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy { max_attempts: self.max_attempts, base_delay: Duration::from_millis(self.base_delay_ms) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeSection {
    pub bind: String,
    pub port: u16,
    /// Environment variable holding the shared token; unset means no auth.
    pub token_env: Option<String>,
    /// Events between snapshots.
    pub snapshot_every: usize,
}

impl Default for ServeSection {
    fn default() -> Self {
        ServeSection { bind: "127.0.0.1".into(), port: 8765, token_env: None, snapshot_every: 100 }
    }
}
