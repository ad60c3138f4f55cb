//! Sample records, their on-disk format, and the synthetic scene world.

mod build;
pub mod caption;
pub mod lexicon;
pub mod scene;

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use build::{build_corpus, BuiltCorpus, CorpusConfig, Provenance};
pub use caption::{
    caption_set, realize, scene_to_caption, template_count, truth_eval, CaptionForm, CaptionSet,
    Degree, InclusionMode, LogicForm,
};
pub use scene::{fact_hash, gen_scene, scene_to_features, EncodedScene, SceneSpec};

use crate::error::{Error, Result};
use crate::taxonomy::CategorySet;

pub const DEFAULT_IMAGE_DIM: usize = 128;
pub const FORMAT_NAME: &str = "logicclip-corpus";
pub const FORMAT_VERSION: u32 = 1;

/// Fixed-length image feature vector with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Image,
    Video,
    Anomaly,
    Medicine,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::Image, Scenario::Video, Scenario::Anomaly, Scenario::Medicine];

    pub fn option_count(self) -> usize {
        match self {
            Scenario::Medicine => 5,
            _ => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Image => "image",
            Scenario::Video => "video",
            Scenario::Anomaly => "anomaly",
            Scenario::Medicine => "medicine",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario {s:?}")))
    }
}

/// Either a path/URI to an external image or embedded features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ImageRef {
    Path(String),
    Features(FeatureVector),
}

impl ImageRef {
    pub fn features(&self) -> Option<&FeatureVector> {
        match self {
            ImageRef::Features(f) => Some(f),
            ImageRef::Path(_) => None,
        }
    }

    /// Stable identifier used for tie-breaking and dedup in retrieval pools.
    pub fn key(&self) -> String {
        match self {
            ImageRef::Path(p) => p.clone(),
            ImageRef::Features(f) => {
                let bits: Vec<u8> = f.values().iter().flat_map(|v| v.to_bits().to_le_bytes()).collect();
                format!("{:016x}", fact_hash(&String::from_utf8_lossy(&bits)))
            }
        }
    }
}

/// One training/evaluation unit: an image, its true caption and hard negatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: String,
    pub scenario: Scenario,
    pub image_ref: ImageRef,
    pub positive: String,
    pub negatives: Vec<String>,
    pub categories: CategorySet,
    pub option_count: usize,
}

impl SampleRecord {
    /// Options in canonical order: positive first.
    pub fn options(&self) -> Vec<&str> {
        std::iter::once(self.positive.as_str()).chain(self.negatives.iter().map(String::as_str)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.option_count != 1 + self.negatives.len() {
            return Err(Error::Format(format!(
                "{}: option_count {} but {} negatives",
                self.sample_id,
                self.option_count,
                self.negatives.len()
            )));
        }
        if self.option_count != self.scenario.option_count() {
            return Err(Error::Format(format!(
                "{}: {} records have {} options, got {}",
                self.sample_id,
                self.scenario,
                self.scenario.option_count(),
                self.option_count
            )));
        }
        if self.negatives.contains(&self.positive) {
            return Err(Error::Format(format!("{}: positive repeated among negatives", self.sample_id)));
        }
        if let ImageRef::Features(f) = &self.image_ref {
            if !f.is_finite() {
                return Err(Error::Format(format!("{}: non-finite image features", self.sample_id)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

/// Writes the header line followed by one JSON document per record.
pub fn write_records<W: Write>(mut out: W, records: &[SampleRecord]) -> Result<()> {
    let header = Header { format: FORMAT_NAME.into(), version: FORMAT_VERSION };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records<R: BufRead>(input: R) -> Result<Vec<SampleRecord>> {
    let mut lines = input.lines();
    let header_line = lines.next().ok_or_else(|| Error::Format("missing corpus header".into()))??;
    let header: Header = serde_json::from_str(&header_line)
        .map_err(|e| Error::Format(format!("bad corpus header: {e}")))?;
    if header.format != FORMAT_NAME || header.version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported corpus format {} v{}",
            header.format, header.version
        )));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: SampleRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("record on line {}: {e}", i + 2)))?;
        r.validate()?;
        records.push(r);
    }
    Ok(records)
}

pub fn save_records(path: &Path, records: &[SampleRecord]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_records(std::io::BufWriter::new(file), records)
}

pub fn load_records(path: &Path) -> Result<Vec<SampleRecord>> {
    let file = std::fs::File::open(path)?;
    read_records(std::io::BufReader::new(file))
}

/// Sidecar written next to a corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub config: CorpusConfig,
    pub rule_table_version: u32,
    pub records: usize,
    pub captions: usize,
    pub positives: usize,
    pub negatives: usize,
    pub per_category: Vec<(String, usize)>,
    pub per_scenario: Vec<(String, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub review: Option<serde_json::Value>,
}

impl Manifest {
    pub fn for_records(config: &CorpusConfig, records: &[SampleRecord]) -> Self {
        let positives = records.len();
        let negatives: usize = records.iter().map(|r| r.negatives.len()).sum();
        let per_category = crate::taxonomy::LogicalCategory::ALL
            .iter()
            .map(|c| (c.name().to_string(), records.iter().filter(|r| r.categories.contains(*c)).count()))
            .collect();
        let per_scenario = Scenario::ALL
            .iter()
            .map(|s| (s.name().to_string(), records.iter().filter(|r| r.scenario == *s).count()))
            .collect();
        Manifest {
            seed: config.seed,
            config: config.clone(),
            rule_table_version: crate::taxonomy::RuleTable::default_table().version(),
            records: records.len(),
            captions: positives + negatives,
            positives,
            negatives,
            per_category,
            per_scenario,
            review: None,
        }
    }

    pub fn sidecar_path(corpus: &Path) -> std::path::PathBuf {
        let mut name = corpus.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".manifest.json");
        corpus.with_file_name(name)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
