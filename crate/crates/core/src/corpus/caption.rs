//! Templated captions whose truth is decidable from a [`SceneSpec`].
//!
//! A singular noun claims presence and a plural noun claims absence. Two
//! nouns are mentioned in lexicon order. Events take an earlier-role or
//! later-role clause, so swapping cause and effect, or earlier and later,
//! changes the caption's words and not only its connective.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lexicon::{self, article, EVENTS};
use super::scene::SceneSpec;
use crate::error::{Error, Result};
use crate::taxonomy::LogicalCategory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Degree {
    Greater,
    Less,
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InclusionMode {
    Including,
    ExceptFor,
    Without,
}

/// The logical content of a caption, with slots bound to scene vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum LogicForm {
    /// Both present.
    Conjunction { a: String, b: String },
    /// Both absent.
    NeitherNor { a: String, b: String },
    /// At least one present.
    Disjunction { a: String, b: String },
    /// Absent.
    Negation { noun: String },
    /// Present.
    Existence { noun: String },
    /// `present` present and `absent` absent.
    Contrast { present: String, absent: String },
    /// Size of `a` relative to `b`; both must be present.
    Comparison { a: String, b: String, degree: Degree },
    /// Material implication on presence.
    Condition { antecedent: String, consequent: String, negated_consequent: bool },
    Causality { cause: String, effect: String },
    Temporality { earlier: String, later: String },
    Inclusion { container: String, item: String, mode: InclusionMode },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CaptionForm {
    pub category: LogicalCategory,
    pub template_id: usize,
    pub form: LogicForm,
    /// Intended truth value; [`truth_eval`] recomputes it from the scene.
    pub truth: bool,
}

/// Number of surface templates available for positives of `category`.
pub fn template_count(category: LogicalCategory) -> usize {
    match category {
        LogicalCategory::Conjunction | LogicalCategory::Contrast => 5,
        LogicalCategory::Negation | LogicalCategory::Condition => 4,
        _ => 3,
    }
}

fn check_noun(n: &str) -> Result<()> {
    lexicon::noun_index(n).map(|_| ()).ok_or_else(|| Error::UnknownSlot(n.to_string()))
}

fn check_event(e: &str) -> Result<()> {
    lexicon::event_index(e).map(|_| ()).ok_or_else(|| Error::UnknownSlot(e.to_string()))
}

/// Evaluates a caption's logical form against the scene facts.
pub fn truth_eval(scene: &SceneSpec, form: &CaptionForm) -> Result<bool> {
    eval_form(scene, &form.form)
}

pub fn eval_form(scene: &SceneSpec, form: &LogicForm) -> Result<bool> {
    let present = |n: &str| scene.has_object(n);
    Ok(match form {
        LogicForm::Conjunction { a, b } => {
            check_noun(a)?;
            check_noun(b)?;
            present(a) && present(b)
        }
        LogicForm::NeitherNor { a, b } => {
            check_noun(a)?;
            check_noun(b)?;
            !present(a) && !present(b)
        }
        LogicForm::Disjunction { a, b } => {
            check_noun(a)?;
            check_noun(b)?;
            present(a) || present(b)
        }
        LogicForm::Negation { noun } => {
            check_noun(noun)?;
            !present(noun)
        }
        LogicForm::Existence { noun } => {
            check_noun(noun)?;
            present(noun)
        }
        LogicForm::Contrast { present: p, absent: x } => {
            check_noun(p)?;
            check_noun(x)?;
            present(p) && !present(x)
        }
        LogicForm::Comparison { a, b, degree } => {
            check_noun(a)?;
            check_noun(b)?;
            match (scene.size_of(a), scene.size_of(b)) {
                (Some(sa), Some(sb)) => match degree {
                    Degree::Greater => sa > sb,
                    Degree::Less => sa < sb,
                    Degree::Equal => sa == sb,
                },
                _ => false,
            }
        }
        LogicForm::Condition { antecedent, consequent, negated_consequent } => {
            check_noun(antecedent)?;
            check_noun(consequent)?;
            !present(antecedent) || (present(consequent) != *negated_consequent)
        }
        LogicForm::Causality { cause, effect } => {
            check_event(cause)?;
            check_event(effect)?;
            scene.has_causal_link(cause, effect)
        }
        LogicForm::Temporality { earlier, later } => {
            check_event(earlier)?;
            check_event(later)?;
            match (scene.event_position(earlier), scene.event_position(later)) {
                (Some(i), Some(j)) => i < j,
                _ => false,
            }
        }
        LogicForm::Inclusion { container, item, mode } => {
            check_noun(container)?;
            check_noun(item)?;
            match mode {
                InclusionMode::Including => scene.contains(container, item),
                InclusionMode::ExceptFor | InclusionMode::Without => {
                    present(container) && !scene.contains(container, item)
                }
            }
        }
    })
}

fn an(noun: &str) -> String {
    format!("{} {}", article(noun), noun)
}

fn plural(noun: &str) -> &str {
    lexicon::plural(noun).unwrap_or(noun)
}

fn clause(event: &str, earlier: bool) -> &str {
    lexicon::event_clause(event, earlier).unwrap_or(event)
}

/// Renders `form` with surface template `template_id` (wrapped per form).
pub fn realize(form: &LogicForm, template_id: usize) -> String {
    match form {
        LogicForm::Conjunction { a, b } => match template_id % 5 {
            0 => format!("there is {} and {}", an(a), an(b)),
            1 => format!("both the {a} and the {b} are here"),
            2 => format!("{} together with {}", an(a), an(b)),
            3 => format!("{} as well as {}", an(a), an(b)),
            _ => format!("not only {} but also {}", an(a), an(b)),
        },
        LogicForm::NeitherNor { a, b } => match template_id % 5 {
            1 => format!("neither {} nor {} are here", plural(a), plural(b)),
            _ => format!("there are neither {} nor {}", plural(a), plural(b)),
        },
        LogicForm::Disjunction { a, b } => match template_id % 3 {
            0 => format!("there is {} or {}", an(a), an(b)),
            1 => format!("either {} or {} is here", an(a), an(b)),
            _ => format!("{} or {} can be seen", an(a), an(b)),
        },
        LogicForm::Negation { noun } => match template_id % 4 {
            0 => format!("there are no {} here", plural(noun)),
            1 => format!("there are not any {} here", plural(noun)),
            2 => format!("a scene without any {}", plural(noun)),
            _ => format!("no {} can be seen", plural(noun)),
        },
        LogicForm::Existence { noun } => match template_id % 4 {
            0 => format!("there is {} here", an(noun)),
            1 => format!("there is indeed {} here", an(noun)),
            2 => format!("a scene with {}", an(noun)),
            _ => format!("{} can be seen", an(noun)),
        },
        LogicForm::Contrast { present, absent } => match template_id % 5 {
            0 => format!("there is {} but no {}", an(present), plural(absent)),
            1 => format!("although there is {}, there are no {}", an(present), plural(absent)),
            2 => format!("there is {}, whereas there are no {}", an(present), plural(absent)),
            3 => format!("there is {}; however, there are no {}", an(present), plural(absent)),
            _ => format!("there is {} while there are no {}", an(present), plural(absent)),
        },
        LogicForm::Comparison { a, b, degree } => {
            let phrase = match (template_id % 3, degree) {
                (0, Degree::Greater) => "bigger than",
                (0, Degree::Less) => "smaller than",
                (0, Degree::Equal) => "as big as",
                (1, Degree::Greater) => "more massive than",
                (1, Degree::Less) => "less massive than",
                (1, Degree::Equal) => "as massive as",
                (_, Degree::Greater) => "larger than",
                (_, Degree::Less) => "not as big as",
                (_, Degree::Equal) => "as large as",
            };
            format!("the {a} is {phrase} the {b}")
        }
        LogicForm::Condition { antecedent, consequent, negated_consequent } => {
            let then = if *negated_consequent {
                format!("there are no {}", plural(consequent))
            } else if template_id.is_multiple_of(4) {
                format!("there is also {}", an(consequent))
            } else {
                format!("there is {}", an(consequent))
            };
            match template_id % 4 {
                0 => format!("if there is {}, {then}", an(antecedent)),
                1 => format!("provided that there is {}, {then}", an(antecedent)),
                2 => format!("in case there is {}, {then}", an(antecedent)),
                _ => format!("there is {} only if {then}", an(antecedent)),
            }
        }
        LogicForm::Causality { cause, effect } => {
            let (c, e) = (clause(cause, true), clause(effect, false));
            match template_id % 3 {
                0 => format!("{e} because {c}"),
                1 => format!("{c}; as a result, {e}"),
                _ => format!("{e} since {c}"),
            }
        }
        LogicForm::Temporality { earlier, later } => {
            let (p, q) = (clause(earlier, true), clause(later, false));
            match template_id % 3 {
                0 => format!("{p} before {q}"),
                1 => format!("{q} after {p}"),
                _ => format!("{q} as soon as {p}"),
            }
        }
        LogicForm::Inclusion { container, item, mode } => match mode {
            InclusionMode::Including => match template_id % 3 {
                0 => format!("the {container} holds things including {}", an(item)),
                1 => format!("the {container} holds things such as {}", an(item)),
                _ => format!("the {container} includes {}", an(item)),
            },
            InclusionMode::ExceptFor => {
                format!("the {container} holds everything except for {}", an(item))
            }
            InclusionMode::Without => format!("the {container} is without {}", an(item)),
        },
    }
}

fn ordered(x: &str, y: &str) -> (String, String) {
    if lexicon::noun_index(x) <= lexicon::noun_index(y) {
        (x.to_string(), y.to_string())
    } else {
        (y.to_string(), x.to_string())
    }
}

fn inapplicable(category: LogicalCategory, why: &str) -> Error {
    Error::TemplateInapplicable(format!("{category}: {why}"))
}

/// A true form for `category`, with operands drawn from the scene by `rng`.
pub fn positive_form(
    scene: &SceneSpec,
    category: LogicalCategory,
    rng: &mut impl Rng,
) -> Result<LogicForm> {
    use LogicalCategory::*;
    let present: Vec<&str> = scene.objects.iter().map(|o| o.noun.as_str()).collect();
    let pick_two = |rng: &mut dyn rand::RngCore| -> Option<(String, String)> {
        if present.len() < 2 {
            return None;
        }
        let picked: Vec<&&str> = present.choose_multiple(rng, 2).collect();
        Some((picked[0].to_string(), picked[1].to_string()))
    };
    let form = match category {
        Conjunction => {
            let (a, b) = pick_two(rng).ok_or_else(|| inapplicable(category, "needs two objects"))?;
            let (a, b) = ordered(&a, &b);
            LogicForm::Conjunction { a, b }
        }
        Disjunction => {
            let a = present.choose(rng).ok_or_else(|| inapplicable(category, "needs an object"))?;
            let absent: Vec<&str> = scene.absent_nouns().collect();
            let b = absent.choose(rng).ok_or_else(|| inapplicable(category, "needs an absent noun"))?;
            let (a, b) = ordered(a, b);
            LogicForm::Disjunction { a, b }
        }
        Negation => {
            let x = scene.excluded.choose(rng).ok_or_else(|| inapplicable(category, "needs an excluded noun"))?;
            LogicForm::Negation { noun: x.clone() }
        }
        Contrast => {
            let p = present.choose(rng).ok_or_else(|| inapplicable(category, "needs an object"))?;
            let x = scene.excluded.choose(rng).ok_or_else(|| inapplicable(category, "needs an excluded noun"))?;
            LogicForm::Contrast { present: p.to_string(), absent: x.clone() }
        }
        Comparison => {
            let (a, b) = pick_two(rng).ok_or_else(|| inapplicable(category, "needs two objects"))?;
            let (a, b) = ordered(&a, &b);
            let (sa, sb) = (scene.size_of(&a), scene.size_of(&b));
            let degree = match sa.cmp(&sb) {
                std::cmp::Ordering::Greater => Degree::Greater,
                std::cmp::Ordering::Less => Degree::Less,
                std::cmp::Ordering::Equal => Degree::Equal,
            };
            if sa.is_none() || sb.is_none() {
                return Err(inapplicable(category, "objects need sizes"));
            }
            LogicForm::Comparison { a, b, degree }
        }
        Condition => {
            let (a, c) = pick_two(rng).ok_or_else(|| inapplicable(category, "needs two objects"))?;
            LogicForm::Condition { antecedent: a, consequent: c, negated_consequent: false }
        }
        Causality => {
            let (c, e) =
                scene.causal_links.choose(rng).ok_or_else(|| inapplicable(category, "needs a causal link"))?;
            LogicForm::Causality { cause: c.clone(), effect: e.clone() }
        }
        Temporality => {
            let n = scene.event_order.len();
            if n < 2 {
                return Err(inapplicable(category, "needs two events"));
            }
            let i = rng.gen_range(0..n - 1);
            let j = rng.gen_range(i + 1..n);
            LogicForm::Temporality {
                earlier: scene.event_order[i].clone(),
                later: scene.event_order[j].clone(),
            }
        }
        Inclusion => {
            let links: Vec<_> = scene.relations.iter().filter(|r| r.predicate == "contains").collect();
            let r = links.choose(rng).ok_or_else(|| inapplicable(category, "needs a containment relation"))?;
            LogicForm::Inclusion {
                container: r.subject.clone(),
                item: r.object.clone(),
                mode: InclusionMode::Including,
            }
        }
    };
    Ok(form)
}

/// Candidate false forms for `positive`, one flip each, ordered so the first
/// few cover distinct flip kinds of the category's family. Each entry carries
/// the surface template to render it with.
pub fn negative_candidates(
    scene: &SceneSpec,
    positive: &LogicForm,
    template_id: usize,
    rng: &mut impl Rng,
) -> Vec<(LogicForm, usize)> {
    let mut absent: Vec<&str> = scene.absent_nouns().collect();
    absent.shuffle(rng);
    let mut present: Vec<&str> = scene.objects.iter().map(|o| o.noun.as_str()).collect();
    present.shuffle(rng);
    let mut absent_events: Vec<&str> = EVENTS
        .iter()
        .map(|(id, _, _)| *id)
        .filter(|e| scene.event_position(e).is_none())
        .collect();
    absent_events.shuffle(rng);
    let t = template_id;

    let mut out: Vec<(LogicForm, usize)> = Vec::new();
    match positive {
        LogicForm::Conjunction { a, b } => {
            out.push((LogicForm::NeitherNor { a: a.clone(), b: b.clone() }, t));
            for (k, x) in absent.iter().take(6).enumerate() {
                let keep = if k % 2 == 0 { b } else { a };
                let (a2, b2) = ordered(x, keep);
                out.push((LogicForm::Conjunction { a: a2, b: b2 }, t));
            }
        }
        LogicForm::Disjunction { a, b } => {
            out.push((LogicForm::Conjunction { a: a.clone(), b: b.clone() }, t % 2));
            out.push((LogicForm::NeitherNor { a: a.clone(), b: b.clone() }, 0));
            let missing = if scene.has_object(a) { b } else { a };
            for x in absent.iter().filter(|x| **x != missing.as_str()).take(5) {
                let (a2, b2) = ordered(x, missing);
                out.push((LogicForm::Disjunction { a: a2, b: b2 }, t));
            }
        }
        LogicForm::Negation { noun } => {
            out.push((LogicForm::Existence { noun: noun.clone() }, t));
            for y in &present {
                out.push((LogicForm::Negation { noun: y.to_string() }, t));
            }
            out.push((LogicForm::Existence { noun: noun.clone() }, (t + 1) % 4));
        }
        LogicForm::Contrast { present: p, absent: x } => {
            let (a2, b2) = ordered(p, x);
            out.push((LogicForm::Conjunction { a: a2, b: b2 }, 0));
            for y in present.iter().filter(|y| **y != p.as_str()) {
                out.push((LogicForm::Contrast { present: p.clone(), absent: y.to_string() }, t));
            }
            for z in absent.iter().filter(|z| **z != x.as_str()).take(4) {
                out.push((LogicForm::Contrast { present: z.to_string(), absent: x.clone() }, t));
            }
        }
        LogicForm::Comparison { a, b, degree } => {
            let swapped = match degree {
                Degree::Greater => Degree::Less,
                Degree::Less => Degree::Greater,
                Degree::Equal => Degree::Greater,
            };
            let reversed = match degree {
                Degree::Greater | Degree::Less => Degree::Equal,
                Degree::Equal => Degree::Less,
            };
            out.push((LogicForm::Comparison { a: a.clone(), b: b.clone(), degree: swapped }, t));
            out.push((LogicForm::Comparison { a: a.clone(), b: b.clone(), degree: reversed }, t));
            for (k, y) in absent.iter().take(6).enumerate() {
                let keep = if k % 2 == 0 { a } else { b };
                let (a2, b2) = ordered(keep, y);
                out.push((LogicForm::Comparison { a: a2, b: b2, degree: *degree }, t));
            }
        }
        LogicForm::Condition { antecedent, consequent, .. } => {
            out.push((
                LogicForm::Condition {
                    antecedent: antecedent.clone(),
                    consequent: consequent.clone(),
                    negated_consequent: true,
                },
                t,
            ));
            for y in absent.iter().take(6) {
                out.push((
                    LogicForm::Condition {
                        antecedent: antecedent.clone(),
                        consequent: y.to_string(),
                        negated_consequent: false,
                    },
                    t,
                ));
            }
        }
        LogicForm::Causality { cause, effect } => {
            out.push((LogicForm::Causality { cause: effect.clone(), effect: cause.clone() }, t));
            for (k, r) in absent_events.iter().take(6).enumerate() {
                let form = if k % 2 == 0 {
                    LogicForm::Causality { cause: cause.clone(), effect: r.to_string() }
                } else {
                    LogicForm::Causality { cause: r.to_string(), effect: effect.clone() }
                };
                out.push((form, t));
            }
        }
        LogicForm::Temporality { earlier, later } => {
            out.push((LogicForm::Temporality { earlier: later.clone(), later: earlier.clone() }, t));
            for (k, r) in absent_events.iter().take(6).enumerate() {
                let form = if k % 2 == 0 {
                    LogicForm::Temporality { earlier: earlier.clone(), later: r.to_string() }
                } else {
                    LogicForm::Temporality { earlier: r.to_string(), later: later.clone() }
                };
                out.push((form, t));
            }
        }
        LogicForm::Inclusion { container, item, .. } => {
            out.push((
                LogicForm::Inclusion {
                    container: container.clone(),
                    item: item.clone(),
                    mode: InclusionMode::ExceptFor,
                },
                t,
            ));
            out.push((
                LogicForm::Inclusion {
                    container: container.clone(),
                    item: item.clone(),
                    mode: InclusionMode::Without,
                },
                t,
            ));
            for y in absent.iter().filter(|y| !lexicon::is_container(y)).take(6) {
                out.push((
                    LogicForm::Inclusion {
                        container: container.clone(),
                        item: y.to_string(),
                        mode: InclusionMode::Including,
                    },
                    t,
                ));
            }
        }
        LogicForm::NeitherNor { .. } | LogicForm::Existence { .. } => {}
    }
    out
}

fn caption_rng(scene: &SceneSpec, category: LogicalCategory, template_id: usize) -> ChaCha8Rng {
    let seed = scene
        .scene_id
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add((category.index() as u64) << 8 | template_id as u64);
    ChaCha8Rng::seed_from_u64(seed)
}

/// Realizes a caption for `category` on `scene`. With `truth = false` the
/// caption carries exactly one flip of the category's family.
pub fn scene_to_caption(
    scene: &SceneSpec,
    category: LogicalCategory,
    template_id: usize,
    truth: bool,
) -> Result<(String, CaptionForm)> {
    if template_id >= template_count(category) {
        return Err(inapplicable(category, &format!("no template {template_id}")));
    }
    let mut rng = caption_rng(scene, category, template_id);
    let positive = positive_form(scene, category, &mut rng)?;
    let positive_text = realize(&positive, template_id);
    let (form, t) = if truth {
        (positive, template_id)
    } else {
        negative_candidates(scene, &positive, template_id, &mut rng)
            .into_iter()
            .find(|(f, t)| {
                realize(f, *t) != positive_text && matches!(eval_form(scene, f), Ok(false))
            })
            .ok_or_else(|| inapplicable(category, "no falsifying flip"))?
    };
    let text = realize(&form, t);
    Ok((text, CaptionForm { category, template_id: t, form, truth }))
}

/// A true caption plus `count` distinct false captions for one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptionSet {
    pub positive: (String, CaptionForm),
    pub negatives: Vec<(String, CaptionForm)>,
}

pub fn caption_set(
    scene: &SceneSpec,
    category: LogicalCategory,
    template_id: usize,
    count: usize,
) -> Result<CaptionSet> {
    let (pos_text, pos_form) = scene_to_caption(scene, category, template_id, true)?;
    let mut rng = caption_rng(scene, category, template_id);
    // Re-draw the same positive so the negative rng stream matches scene_to_caption.
    let positive = positive_form(scene, category, &mut rng)?;
    debug_assert_eq!(positive, pos_form.form);
    let mut negatives: Vec<(String, CaptionForm)> = Vec::with_capacity(count);
    for (form, t) in negative_candidates(scene, &positive, template_id, &mut rng) {
        if negatives.len() == count {
            break;
        }
        let text = realize(&form, t);
        if text == pos_text || negatives.iter().any(|(n, _)| *n == text) {
            continue;
        }
        if eval_form(scene, &form)? {
            continue;
        }
        negatives.push((text, CaptionForm { category, template_id: t, form, truth: false }));
    }
    if negatives.len() < count {
        return Err(inapplicable(category, &format!("only {} distinct negatives", negatives.len())));
    }
    Ok(CaptionSet { positive: (pos_text, pos_form), negatives })
}
