use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lexicon::{self, CAUSAL_PAIRS, EVENTS, NOUNS, PREDICATES};
use super::FeatureVector;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SceneObject {
    pub noun: String,
    pub attributes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

/// Ground-truth world a synthetic image and its captions are derived from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SceneSpec {
    pub scene_id: u64,
    pub objects: Vec<SceneObject>,
    pub relations: Vec<Relation>,
    pub event_order: Vec<String>,
    /// (cause, effect)
    pub causal_links: Vec<(String, String)>,
    pub excluded: Vec<String>,
}

impl SceneSpec {
    pub fn has_object(&self, noun: &str) -> bool {
        self.objects.iter().any(|o| o.noun == noun)
    }

    pub fn object(&self, noun: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.noun == noun)
    }

    pub fn size_of(&self, noun: &str) -> Option<usize> {
        self.object(noun)?.attributes.iter().find_map(|a| lexicon::size_rank(a))
    }

    pub fn contains(&self, container: &str, item: &str) -> bool {
        self.relations
            .iter()
            .any(|r| r.predicate == "contains" && r.subject == container && r.object == item)
    }

    pub fn event_position(&self, event: &str) -> Option<usize> {
        self.event_order.iter().position(|e| e == event)
    }

    pub fn has_causal_link(&self, cause: &str, effect: &str) -> bool {
        self.causal_links.iter().any(|(c, e)| c == cause && e == effect)
    }

    /// Nouns from the lexicon that are not in the scene, in lexicon order.
    pub fn absent_nouns(&self) -> impl Iterator<Item = &'static str> + '_ {
        NOUNS.iter().map(|(n, _, _)| *n).filter(|n| !self.has_object(n))
    }

    /// Canonical fact strings; each contributes one hashed feature.
    pub fn facts(&self) -> Vec<String> {
        let mut facts = Vec::new();
        for o in &self.objects {
            facts.push(format!("obj:{}", o.noun));
            for a in &o.attributes {
                facts.push(format!("attr:{}:{}", o.noun, a));
            }
        }
        for r in &self.relations {
            facts.push(format!("rel:{}:{}:{}", r.subject, r.predicate, r.object));
        }
        for (i, a) in self.event_order.iter().enumerate() {
            for b in &self.event_order[i + 1..] {
                facts.push(format!("order:{a}<{b}"));
            }
        }
        for (c, e) in &self.causal_links {
            facts.push(format!("cause:{c}>{e}"));
        }
        facts
    }
}

/// Deterministic scene for `seed`.
pub fn gen_scene(seed: u64) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let n_objects = rng.gen_range(2..=6);
    let containers: Vec<usize> = (0..NOUNS.len()).filter(|&i| NOUNS[i].2).collect();
    let mut chosen: Vec<usize> = Vec::with_capacity(n_objects);
    if rng.gen_bool(0.5) {
        chosen.push(*containers.choose(&mut rng).expect("lexicon has containers"));
    }
    while chosen.len() < n_objects {
        let i = rng.gen_range(0..NOUNS.len());
        if !chosen.contains(&i) {
            chosen.push(i);
        }
    }
    let objects: Vec<SceneObject> = chosen
        .iter()
        .map(|&i| {
            let mut attributes = vec![lexicon::SIZES[rng.gen_range(0..lexicon::SIZES.len())].to_string()];
            if rng.gen_bool(0.4) {
                attributes.push(lexicon::COLORS[rng.gen_range(0..lexicon::COLORS.len())].to_string());
            }
            SceneObject { noun: NOUNS[i].0.to_string(), attributes }
        })
        .collect();

    let n_relations = rng.gen_range(0..=3);
    let mut relations: Vec<Relation> = Vec::new();
    for _ in 0..n_relations {
        let container = objects.iter().find(|o| lexicon::is_container(&o.noun));
        let items: Vec<&SceneObject> =
            objects.iter().filter(|o| !lexicon::is_container(&o.noun)).collect();
        let rel = match container {
            Some(c) if !items.is_empty() && rng.gen_bool(0.7) => Relation {
                subject: c.noun.clone(),
                predicate: "contains".into(),
                object: items[rng.gen_range(0..items.len())].noun.clone(),
            },
            _ => {
                let s = rng.gen_range(0..objects.len());
                let mut o = rng.gen_range(0..objects.len() - 1);
                if o >= s {
                    o += 1;
                }
                Relation {
                    subject: objects[s].noun.clone(),
                    predicate: PREDICATES[rng.gen_range(1..PREDICATES.len())].into(),
                    object: objects[o].noun.clone(),
                }
            }
        };
        if !relations.contains(&rel) {
            relations.push(rel);
        }
    }

    let n_events = rng.gen_range(2..=4);
    let n_links = rng.gen_range(0..=2);
    let mut causal_links: Vec<(String, String)> = Vec::new();
    let mut events: Vec<&str> = Vec::new();
    for _ in 0..n_links {
        let &(c, e) = CAUSAL_PAIRS.choose(&mut rng).expect("causal table is non-empty");
        let fresh = [c, e].iter().filter(|x| !events.contains(x)).count();
        if events.len() + fresh > n_events || causal_links.iter().any(|(a, b)| a == c && b == e) {
            continue;
        }
        for x in [c, e] {
            if !events.contains(&x) {
                events.push(x);
            }
        }
        causal_links.push((c.to_string(), e.to_string()));
    }
    while events.len() < n_events {
        let (id, _, _) = EVENTS[rng.gen_range(0..EVENTS.len())];
        if !events.contains(&id) {
            events.push(id);
        }
    }
    // Random order in which every cause precedes its effect.
    let mut event_order: Vec<String> = Vec::with_capacity(n_events);
    while event_order.len() < events.len() {
        let ready: Vec<&str> = events
            .iter()
            .copied()
            .filter(|x| !event_order.iter().any(|o| o == x))
            .filter(|x| causal_links.iter().all(|(c, e)| e != x || event_order.contains(c)))
            .collect();
        event_order.push(ready.choose(&mut rng).expect("causal table is acyclic").to_string());
    }

    let n_excluded = rng.gen_range(1..=2);
    let mut excluded: Vec<String> = Vec::new();
    while excluded.len() < n_excluded {
        let (noun, _, _) = NOUNS[rng.gen_range(0..NOUNS.len())];
        if !chosen.iter().any(|&i| NOUNS[i].0 == noun) && !excluded.iter().any(|e| e == noun) {
            excluded.push(noun.to_string());
        }
    }

    SceneSpec { scene_id: seed, objects, relations, event_order, causal_links, excluded }
}

/// FNV-1a over the fact string followed by the splitmix64 finalizer.
pub fn fact_hash(fact: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in fact.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^= h >> 30;
    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h ^= h >> 27;
    h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedScene {
    pub features: FeatureVector,
    /// No facts: the vector is all zeros and was left unscaled.
    pub degenerate: bool,
    /// Number of fact pairs that landed in the same index.
    pub colliding_pairs: usize,
    pub fact_pairs: usize,
}

pub fn scene_to_features(scene: &SceneSpec, dim: usize) -> EncodedScene {
    let facts = scene.facts();
    let mut values = vec![0.0; dim];
    let indices: Vec<usize> = facts.iter().map(|f| (fact_hash(f) % dim as u64) as usize).collect();
    for &i in &indices {
        values[i] += 1.0;
    }
    let mut colliding_pairs = 0;
    for (a, &i) in indices.iter().enumerate() {
        colliding_pairs += indices[a + 1..].iter().filter(|&&j| j == i).count();
    }
    let n = indices.len();
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    let degenerate = norm == 0.0;
    if !degenerate {
        values.iter_mut().for_each(|v| *v /= norm);
    }
    EncodedScene {
        features: FeatureVector::new(values),
        degenerate,
        colliding_pairs,
        fact_pairs: n * n.saturating_sub(1) / 2,
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    #[test]
    fn deterministic_in_seed() {
        assert_eq!(gen_scene(0), gen_scene(0));
        assert_ne!(gen_scene(0), gen_scene(1));
    }

    #[test]
    fn thousand_seeds_give_distinct_scenes() {
        let distinct: HashSet<String> = (0..1000u64)
            .map(|s| {
                let mut scene = gen_scene(s);
                scene.scene_id = 0;
                serde_json::to_string(&scene).unwrap()
            })
            .collect();
        assert!(distinct.len() >= 990, "only {} distinct", distinct.len());
    }

    #[test]
    fn structural_ranges_hold() {
        for seed in 0..2000 {
            let s = gen_scene(seed);
            assert!((2..=6).contains(&s.objects.len()));
            assert!(s.relations.len() <= 3);
            assert!((2..=4).contains(&s.event_order.len()));
            assert!(s.causal_links.len() <= 2);
            assert!((1..=2).contains(&s.excluded.len()));
            for e in &s.excluded {
                assert!(!s.has_object(e), "seed {seed}: excluded {e} present");
            }
            for o in &s.objects {
                assert!(s.size_of(&o.noun).is_some());
            }
            for (c, e) in &s.causal_links {
                assert!(s.event_position(c) < s.event_position(e));
            }
        }
    }

    #[test]
    fn fact_hash_is_pinned() {
        assert_eq!(fact_hash(""), 0xf52a_15e9_a9b5_e89b);
        assert_eq!(fact_hash("obj:cat"), 0x4a80_f0b4_6a31_123d);
        assert_eq!(fact_hash("cause:rain>wet_ground"), 0x1dfc_3eb0_9e4a_9b02);
    }

    #[test]
    fn features_unit_norm_and_deterministic() {
        let s = gen_scene(3);
        let a = scene_to_features(&s, 128);
        let b = scene_to_features(&s, 128);
        assert_eq!(a, b);
        assert!(!a.degenerate);
        let norm: f64 = a.features.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_scene_is_degenerate() {
        let s = SceneSpec {
            scene_id: 0,
            objects: vec![],
            relations: vec![],
            event_order: vec![],
            causal_links: vec![],
            excluded: vec![],
        };
        let enc = scene_to_features(&s, 128);
        assert!(enc.degenerate);
        assert!(enc.features.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn causal_link_changes_features() {
        let mut a = gen_scene(11);
        a.event_order = vec!["rain".into(), "wet_ground".into(), "bell".into()];
        a.causal_links = vec![("rain".into(), "wet_ground".into())];
        let mut b = a.clone();
        b.causal_links = vec![("rain".into(), "bell".into())];
        assert_ne!(scene_to_features(&a, 128).features, scene_to_features(&b, 128).features);
    }

    #[test]
    fn collision_rate_is_small() {
        let (mut colliding, mut pairs) = (0usize, 0usize);
        for seed in 0..2000 {
            let enc = scene_to_features(&gen_scene(seed), 128);
            colliding += enc.colliding_pairs;
            pairs += enc.fact_pairs;
        }
        let rate = colliding as f64 / pairs as f64;
        assert!(rate < 0.05, "pairwise collision rate {rate}");
    }
}
