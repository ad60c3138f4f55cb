use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::caption::{caption_set, template_count, CaptionForm};
use super::scene::{gen_scene, scene_to_features, SceneSpec};
use super::{ImageRef, SampleRecord, Scenario, DEFAULT_IMAGE_DIM};
use crate::error::{Error, Result};
use crate::par::{self, ExecMode};
use crate::taxonomy::{detect_categories, LogicalCategory};

const SCENE_ATTEMPTS: u64 = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub scenes: usize,
    pub seed: u64,
    /// Index of the first record; held-out splits use a disjoint range.
    pub start_index: u64,
    pub d_img: usize,
    /// Relative weight per category, in index order.
    pub category_weights: [f64; LogicalCategory::COUNT],
    /// Relative weight per scenario: image, video, anomaly, medicine.
    pub scenario_weights: [f64; 4],
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            scenes: 2000,
            seed: 7,
            start_index: 0,
            d_img: DEFAULT_IMAGE_DIM,
            category_weights: [1.0; LogicalCategory::COUNT],
            scenario_weights: [1.0, 0.0, 0.0, 0.0],
        }
    }
}

impl CorpusConfig {
    fn validate(&self) -> Result<()> {
        let ok = |w: &[f64]| w.iter().all(|x| x.is_finite() && *x >= 0.0) && w.iter().sum::<f64>() > 0.0;
        if !ok(&self.category_weights) {
            return Err(Error::Config("category weights must be non-negative with a positive sum".into()));
        }
        if !ok(&self.scenario_weights) {
            return Err(Error::Config("scenario weights must be non-negative with a positive sum".into()));
        }
        if self.d_img == 0 {
            return Err(Error::Config("d_img must be positive".into()));
        }
        Ok(())
    }
}

/// Generation-side facts for one record, kept in memory only.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub scene: SceneSpec,
    /// Category the record was generated for.
    pub category: LogicalCategory,
    pub positive: CaptionForm,
    pub negatives: Vec<CaptionForm>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuiltCorpus {
    pub records: Vec<SampleRecord>,
    pub provenance: Vec<Provenance>,
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ b.wrapping_mul(0xc2b2_ae3d_27d4_eb4f);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn build_one(
    config: &CorpusConfig,
    categories: &WeightedIndex<f64>,
    scenarios: &WeightedIndex<f64>,
    index: u64,
) -> Result<(SampleRecord, Provenance)> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(config.seed, index, u64::MAX));
    let scenario = Scenario::ALL[scenarios.sample(&mut rng)];
    let category = LogicalCategory::ALL[categories.sample(&mut rng)];
    let template_id = rng.gen_range(0..template_count(category));
    let n_neg = scenario.option_count() - 1;

    for attempt in 0..SCENE_ATTEMPTS {
        let scene = gen_scene(mix(config.seed, index, attempt));
        let Ok(set) = caption_set(&scene, category, template_id, n_neg) else {
            continue;
        };
        let features = scene_to_features(&scene, config.d_img).features;
        let record = SampleRecord {
            sample_id: format!("s{index:06}"),
            scenario,
            image_ref: ImageRef::Features(features),
            categories: detect_categories(&set.positive.0),
            positive: set.positive.0,
            negatives: set.negatives.iter().map(|(t, _)| t.clone()).collect(),
            option_count: n_neg + 1,
        };
        let provenance = Provenance {
            scene,
            category,
            positive: set.positive.1,
            negatives: set.negatives.into_iter().map(|(_, f)| f).collect(),
        };
        return Ok((record, provenance));
    }
    Err(Error::TemplateInapplicable(format!(
        "record {index}: no applicable scene for {category} template {template_id} in {SCENE_ATTEMPTS} attempts"
    )))
}

/// Generates `config.scenes` records. Output depends only on `config`;
/// `mode` only changes how the work is scheduled.
pub fn build_corpus(config: &CorpusConfig, mode: ExecMode) -> Result<BuiltCorpus> {
    config.validate()?;
    let categories = WeightedIndex::new(config.category_weights).map_err(|e| Error::Config(e.to_string()))?;
    let scenarios = WeightedIndex::new(config.scenario_weights).map_err(|e| Error::Config(e.to_string()))?;
    let built = par::map_range(mode, config.scenes, |i| {
        build_one(config, &categories, &scenarios, config.start_index + i as u64)
    });
    let mut records = Vec::with_capacity(built.len());
    let mut provenance = Vec::with_capacity(built.len());
    for item in built {
        let (r, p) = item?;
        records.push(r);
        provenance.push(p);
    }
    Ok(BuiltCorpus { records, provenance })
}
