use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{fact_hash, ImageRef, SampleRecord};
use crate::encoder::Model;
use crate::error::{Error, Result};
use crate::par::{self, ExecMode};

/// Anything that maps images and captions into a shared space.
pub trait Embedder: Sync {
    fn embed_image(&self, image: &ImageRef) -> Result<Vec<f64>>;
    fn embed_text(&self, text: &str) -> Result<Vec<f64>>;
}

impl Embedder for Model {
    fn embed_image(&self, image: &ImageRef) -> Result<Vec<f64>> {
        match image {
            ImageRef::Features(f) => Model::embed_image(self, f.values()),
            ImageRef::Path(p) => Err(Error::InvalidBatch(format!("image {p:?} has no embedded features"))),
        }
    }

    fn embed_text(&self, text: &str) -> Result<Vec<f64>> {
        Model::embed_text(self, text)
    }
}

/// Cosine similarity; 0 when either side has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let (na, nb) = (dot(a, a).sqrt(), dot(b, b).sqrt());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot(a, b) / (na * nb)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McqOutcome {
    pub correct: bool,
    /// Several options shared the top score.
    pub tie: bool,
}

/// Permutation of `0..n` applied to one record's options.
pub fn option_permutation(sample_id: &str, n: usize, shuffle_seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed ^ fact_hash(sample_id));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

/// Predicts among the shuffled options of one record. Ties go to the lowest
/// shuffled position.
pub fn mcq_outcome(image: &[f64], option_embeddings: &[Vec<f64>], order: &[usize]) -> McqOutcome {
    let scores: Vec<f64> = order.iter().map(|&o| cosine(image, &option_embeddings[o])).collect();
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pick = scores.iter().position(|&s| s == best).unwrap_or(0);
    let tie = scores.iter().filter(|&&s| s == best).count() > 1;
    McqOutcome { correct: order[pick] == 0, tie }
}

pub fn mcq_outcomes(
    model: &impl Embedder,
    records: &[SampleRecord],
    shuffle_seed: u64,
    mode: ExecMode,
) -> Result<Vec<McqOutcome>> {
    par::map(mode, records, |r| {
        let image = model.embed_image(&r.image_ref)?;
        let options = r.options().iter().map(|o| model.embed_text(o)).collect::<Result<Vec<_>>>()?;
        let order = option_permutation(&r.sample_id, options.len(), shuffle_seed);
        Ok(mcq_outcome(&image, &options, &order))
    })
    .into_iter()
    .collect()
}

pub fn mcq_accuracy(model: &impl Embedder, records: &[SampleRecord], shuffle_seed: u64) -> Result<f64> {
    let outcomes = mcq_outcomes(model, records, shuffle_seed, ExecMode::default())?;
    Ok(rate(outcomes.iter().filter(|o| o.correct).count(), outcomes.len()))
}

pub(crate) fn rate(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Positive caption as query, images as the pool.
    #[default]
    TextToImage,
    /// Image as query, positive captions as the pool.
    ImageToText,
}

/// Rank (0-based) of each query's own pool entry. `scores[q][p]` is the
/// similarity of query `q` to pool entry `p`, `own[q]` the matching entry,
/// and `keys` break score ties (ascending).
pub fn ranks(scores: &[Vec<f64>], own: &[usize], keys: &[String]) -> Vec<usize> {
    scores
        .iter()
        .zip(own)
        .map(|(row, &o)| {
            let s = row[o];
            row.iter()
                .enumerate()
                .filter(|&(p, &v)| p != o && (v > s || (v == s && keys[p] < keys[o])))
                .count()
        })
        .collect()
}

/// Rank of each record's own match within the pool formed by `records`.
/// Records with identical images share one pool entry.
pub fn retrieval_ranks(
    model: &impl Embedder,
    records: &[SampleRecord],
    direction: Direction,
    mode: ExecMode,
) -> Result<(Vec<usize>, usize)> {
    let images: Vec<Vec<f64>> =
        par::map(mode, records, |r| model.embed_image(&r.image_ref)).into_iter().collect::<Result<_>>()?;
    let texts: Vec<Vec<f64>> =
        par::map(mode, records, |r| model.embed_text(&r.positive)).into_iter().collect::<Result<_>>()?;
    let (queries, pool, keys, own) = match direction {
        Direction::TextToImage => {
            let mut keys: Vec<String> = Vec::new();
            let mut pool: Vec<&Vec<f64>> = Vec::new();
            let mut own = Vec::with_capacity(records.len());
            for (r, v) in records.iter().zip(&images) {
                let key = r.image_ref.key();
                let at = match keys.iter().position(|k| *k == key) {
                    Some(at) => at,
                    None => {
                        keys.push(key);
                        pool.push(v);
                        keys.len() - 1
                    }
                };
                own.push(at);
            }
            (&texts, pool, keys, own)
        }
        Direction::ImageToText => {
            let keys = records.iter().map(|r| r.sample_id.clone()).collect();
            (&images, texts.iter().collect(), keys, (0..records.len()).collect())
        }
    };
    let scores: Vec<Vec<f64>> =
        par::map(mode, queries, |q| pool.iter().map(|p| cosine(q, p)).collect());
    Ok((ranks(&scores, &own, &keys), pool.len()))
}

pub fn retrieval_recall(model: &impl Embedder, records: &[SampleRecord], k: usize) -> Result<f64> {
    let (ranks, pool) = retrieval_ranks(model, records, Direction::TextToImage, ExecMode::default())?;
    recall_from_ranks(&ranks, pool, k)
}

pub fn recall_from_ranks(ranks: &[usize], pool: usize, k: usize) -> Result<f64> {
    if k == 0 || k > pool {
        return Err(Error::KTooLarge { k, pool });
    }
    Ok(rate(ranks.iter().filter(|&&r| r < k).count(), ranks.len()))
}

/// cos(image, positive) − max over negatives of cos(image, negative).
pub fn perturbation_gaps(model: &impl Embedder, records: &[SampleRecord], mode: ExecMode) -> Result<Vec<f64>> {
    par::map(mode, records, |r| {
        if r.negatives.is_empty() {
            return Err(Error::InvalidBatch(format!("{}: no negatives", r.sample_id)));
        }
        let image = model.embed_image(&r.image_ref)?;
        let pos = cosine(&image, &model.embed_text(&r.positive)?);
        let mut best = f64::NEG_INFINITY;
        for n in &r.negatives {
            best = best.max(cosine(&image, &model.embed_text(n)?));
        }
        Ok(pos - best)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub mean_gap: f64,
    /// Fraction of records with gap ≤ 0.
    pub blindspot_rate: f64,
}

pub fn summarize_gaps(gaps: &[f64]) -> GapSummary {
    let n = gaps.len();
    GapSummary {
        mean_gap: if n == 0 { 0.0 } else { gaps.iter().sum::<f64>() / n as f64 },
        blindspot_rate: rate(gaps.iter().filter(|&&g| g <= 0.0).count(), n),
    }
}
