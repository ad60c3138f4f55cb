//! Deterministic text-level perturbations, one family per logical category.
//!
//! Every flip works on whole words, so "and" never fires inside "sandwich"
//! and "no" never fires inside "north".

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;

use logicclip_core::corpus::lexicon;
use logicclip_core::taxonomy::FlipKind;
use logicclip_core::{detect_categories, LogicalCategory};

use crate::error::{ForgeError, Result};

/// Nouns outside the scene lexicon that show up in everyday captions.
const EXTRA_NOUNS: &[(&str, &str)] = &[
    ("man", "men"),
    ("woman", "women"),
    ("boy", "boys"),
    ("girl", "girls"),
    ("child", "children"),
    ("person", "people"),
    ("table", "tables"),
    ("tree", "trees"),
    ("bus", "buses"),
    ("train", "trains"),
    ("plate", "plates"),
    ("pizza", "pizzas"),
    ("bench", "benches"),
    ("house", "houses"),
    ("room", "rooms"),
    ("street", "streets"),
];

const ANTONYMS: &[(&str, &str)] = &[
    ("wet", "dry"),
    ("open", "closed"),
    ("up", "down"),
    ("left", "right"),
    ("day", "night"),
    ("hot", "cold"),
    ("full", "empty"),
    ("inside", "outside"),
    ("black", "white"),
    ("young", "old"),
    ("sitting", "standing"),
    ("light", "dark"),
    ("empty", "crowded"),
];

const DEGREE_PAIRS: &[(&str, &str)] = &[
    ("more", "less"),
    ("bigger", "smaller"),
    ("larger", "smaller"),
    ("taller", "shorter"),
    ("older", "younger"),
    ("heavier", "lighter"),
    ("longer", "shorter"),
    ("faster", "slower"),
    ("higher", "lower"),
    ("better", "worse"),
    ("most", "least"),
    ("wider", "narrower"),
];

/// Comparative and base form.
const COMPARATIVES: &[(&str, &str)] = &[
    ("bigger", "big"),
    ("larger", "large"),
    ("smaller", "small"),
    ("taller", "tall"),
    ("shorter", "short"),
    ("older", "old"),
    ("younger", "young"),
    ("heavier", "heavy"),
    ("lighter", "light"),
    ("longer", "long"),
    ("faster", "fast"),
    ("slower", "slow"),
    ("higher", "high"),
    ("lower", "low"),
    ("wider", "wide"),
];

const CAUSAL: &[&str] = &["because", "since", "due to", "as a result", "so", "therefore"];
const TEMPORAL: &[&str] = &["before", "after", "as soon as", "when", "then", "while"];
const CONDITIONAL: &[&str] = &["provided that", "in case", "only if", "if", "unless"];
const CONNECTIVES: &[&str] = &["and", "or", "but", "nor", "whereas", "while", "although"];

/// Three hard negatives for `caption`, built from `category`'s flip family.
pub fn perturb_rule_based(caption: &str, category: LogicalCategory, seed: u64) -> Result<Vec<String>> {
    perturb_n(caption, category, seed, 3)
}

/// `count` distinct negatives, none equal to `caption`. Kinds are visited
/// round-robin in a seeded order so each kind contributes before any repeats.
pub fn perturb_n(caption: &str, category: LogicalCategory, seed: u64, count: usize) -> Result<Vec<String>> {
    if !detect_categories(caption).contains(category) {
        return Err(ForgeError::CategoryNotDetected { category, caption: caption.to_string() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kinds = category.flip_family().to_vec();
    kinds.shuffle(&mut rng);
    let mut pools: Vec<std::vec::IntoIter<String>> =
        kinds.iter().map(|&k| flip_candidates(caption, k, &mut rng).into_iter()).collect();

    let mut out: Vec<String> = Vec::with_capacity(count);
    let mut live = pools.len();
    while out.len() < count && live > 0 {
        live = 0;
        for pool in &mut pools {
            if out.len() == count {
                break;
            }
            for candidate in pool.by_ref() {
                if candidate != caption && !out.contains(&candidate) {
                    out.push(candidate);
                    live += 1;
                    break;
                }
            }
        }
    }
    if out.len() < count {
        return Err(ForgeError::NoOp { category, caption: caption.to_string(), found: out.len(), needed: count });
    }
    Ok(out)
}

/// Every rewrite of one kind that applies to `caption`, most canonical first.
pub fn flip_candidates(caption: &str, kind: FlipKind, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut out = match kind {
        FlipKind::ConnectiveSwap => connective_swap(caption),
        FlipKind::OperandSubstitution => operand_substitution(caption, rng),
        FlipKind::OperandSwap => operand_swap(caption),
        FlipKind::NegationFlip => negation_flip(caption),
        FlipKind::CauseEffectSwap => swap_clauses(caption, CAUSAL).into_iter().collect(),
        FlipKind::OrderSwap => order_swap(caption),
        FlipKind::DegreeSwap => degree_swap(caption),
        FlipKind::ComparisonReversal => comparison_reversal(caption),
        FlipKind::IncludeExcludeSwap => include_exclude_swap(caption),
        FlipKind::ConditionInversion => condition_inversion(caption),
        FlipKind::ContrastConjunctionSwap => contrast_swap(caption),
    };
    let mut seen = BTreeSet::new();
    out.retain(|c| !c.trim().is_empty() && c != caption && seen.insert(c.clone()));
    out
}

fn phrase_re(phrase: &str) -> Regex {
    let body = phrase.split_whitespace().map(regex::escape).collect::<Vec<_>>().join(r"\s+");
    Regex::new(&format!(r"(?i)\b{body}\b")).expect("phrase pattern")
}

/// `repl` with its first letter raised when `matched` starts uppercase.
fn keep_case(matched: &str, repl: &str) -> String {
    if matched.starts_with(|c: char| c.is_uppercase()) {
        capitalize(repl)
    } else {
        repl.to_string()
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn decapitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if !s.starts_with("I ") => c.to_lowercase().chain(chars).collect(),
        _ => s.to_string(),
    }
}

/// Replaces the first whole-word occurrence of `from`.
fn replace_first(text: &str, from: &str, to: &str) -> Option<String> {
    let m = phrase_re(from).find(text)?;
    Some(format!("{}{}{}", &text[..m.start()], keep_case(m.as_str(), to), &text[m.end()..]))
}

fn contains_word(text: &str, phrase: &str) -> bool {
    phrase_re(phrase).is_match(text)
}

/// Splits off trailing sentence punctuation.
fn split_terminal(text: &str) -> (&str, &str) {
    let body = text.trim_end().trim_end_matches(['.', '!', '?']);
    (body, &text[body.len()..])
}

fn connective_swap(caption: &str) -> Vec<String> {
    let mut out = Vec::new();
    if contains_word(caption, "both") && contains_word(caption, "and") {
        if let Some(s) = replace_first(caption, "both", "either").and_then(|s| replace_first(&s, "and", "or")) {
            out.push(agree_after(&s, "or", "are", "is"));
        }
    }
    if contains_word(caption, "either") && contains_word(caption, "or") {
        if let Some(s) = replace_first(caption, "either", "both").and_then(|s| replace_first(&s, "or", "and")) {
            out.push(agree_after(&s, "and", "is", "are"));
        }
    }
    if contains_word(caption, "neither") && contains_word(caption, "nor") {
        if let Some(s) = replace_first(caption, "neither", "either").and_then(|s| replace_first(&s, "nor", "or")) {
            out.push(s);
        }
        if let Some(s) = replace_first(caption, "neither", "both").and_then(|s| replace_first(&s, "nor", "and")) {
            out.push(s);
        }
    }
    if contains_word(caption, "not only") && contains_word(caption, "but also") {
        if let Some(s) = replace_first(caption, "not only", "either").and_then(|s| replace_first(&s, "but also", "or")) {
            out.push(s);
        }
    }
    for (from, to) in [("as well as", "or"), ("together with", "or"), ("and", "or"), ("or", "and")] {
        if let Some(s) = replace_first(caption, from, to) {
            out.push(s);
        }
    }
    out
}

/// Fixes number agreement on the first `from` verb after the connective.
fn agree_after(text: &str, connective: &str, from: &str, to: &str) -> String {
    let Some(m) = phrase_re(connective).find(text) else {
        return text.to_string();
    };
    let tail = &text[m.end()..];
    match replace_first(tail, from, to) {
        Some(t) => format!("{}{}", &text[..m.end()], t),
        None => text.to_string(),
    }
}

/// Known noun in `text`: (byte range, index into `noun_table()`, is plural).
fn find_nouns(text: &str) -> Vec<(std::ops::Range<usize>, usize, bool)> {
    let table = noun_table();
    let word = Regex::new(r"[A-Za-z]+").expect("word pattern");
    word.find_iter(text)
        .filter_map(|m| {
            let w = m.as_str().to_ascii_lowercase();
            table.iter().enumerate().find_map(|(i, (s, p))| {
                if *s == w {
                    Some((m.range(), i, false))
                } else if *p == w {
                    Some((m.range(), i, true))
                } else {
                    None
                }
            })
        })
        .collect()
}

fn noun_table() -> Vec<(&'static str, &'static str)> {
    lexicon::NOUNS.iter().map(|&(s, p, _)| (s, p)).chain(EXTRA_NOUNS.iter().copied()).collect()
}

/// Writes noun `index` into `range`, fixing a preceding "a"/"an".
fn put_noun(text: &str, range: std::ops::Range<usize>, index: usize, plural: bool) -> String {
    let (s, p) = noun_table()[index];
    let noun = keep_case(&text[range.clone()], if plural { p } else { s });
    let before = &text[..range.start];
    let article = Regex::new(r"(?i)\b(an?)\s+$").expect("article pattern");
    match article.captures(before) {
        Some(c) if !plural => {
            let a = c.get(1).expect("group");
            let fixed = keep_case(a.as_str(), lexicon::article(s));
            format!("{}{}{}{}{}", &before[..a.start()], fixed, &before[a.end()..], noun, &text[range.end..])
        }
        _ => format!("{before}{noun}{}", &text[range.end..]),
    }
}

fn operand_substitution(caption: &str, rng: &mut ChaCha8Rng) -> Vec<String> {
    // Event clauses are operands as a whole; nouns inside them are not.
    let mut out = event_substitution(caption, rng);
    if out.is_empty() {
        let nouns = find_nouns(caption);
        let present: BTreeSet<usize> = nouns.iter().map(|n| n.1).collect();
        let mut others: Vec<usize> = (0..noun_table().len()).filter(|i| !present.contains(i)).collect();
        others.shuffle(rng);
        // Alternate between operands so the first few outputs touch different ones.
        for (round, replacement) in others.iter().take(6).enumerate() {
            if nouns.is_empty() {
                break;
            }
            let (range, _, plural) = nouns[round % nouns.len()].clone();
            out.push(put_noun(caption, range, *replacement, plural));
        }
    }
    for &(a, b) in ANTONYMS {
        for (from, to) in [(a, b), (b, a)] {
            if let Some(s) = replace_first(caption, from, to) {
                out.push(s);
            }
        }
    }
    out
}

fn event_substitution(caption: &str, rng: &mut ChaCha8Rng) -> Vec<String> {
    let lower = caption.to_lowercase();
    let mut out = Vec::new();
    for &(event, earlier_form, later_form) in lexicon::EVENTS {
        for (form, earlier) in [(earlier_form, true), (later_form, false)] {
            if !lower.contains(form) {
                continue;
            }
            let mut alternatives: Vec<&str> = lexicon::EVENTS
                .iter()
                .filter(|e| e.0 != event && !lower.contains(if earlier { e.1 } else { e.2 }))
                .map(|e| if earlier { e.1 } else { e.2 })
                .collect();
            alternatives.shuffle(rng);
            for alt in alternatives.into_iter().take(3) {
                if let Some(s) = replace_first(caption, form, alt) {
                    out.push(s);
                }
            }
        }
    }
    out
}

fn operand_swap(caption: &str) -> Vec<String> {
    let mut out = Vec::new();
    let nouns = find_nouns(caption);
    if let Some(second) = nouns.iter().position(|n| n.1 != nouns[0].1) {
        let (r1, i1, p1) = nouns[0].clone();
        let (r2, i2, p2) = nouns[second].clone();
        // Later range first so the earlier offsets stay valid.
        let swapped = put_noun(caption, r2, i1, p2);
        out.push(put_noun(&swapped, r1, i2, p1));
    }
    let mut connectives: Vec<&str> = CONNECTIVES.to_vec();
    connectives.extend(CONDITIONAL);
    connectives.extend(TEMPORAL);
    if let Some(s) = swap_clauses(caption, &connectives) {
        out.push(s);
    }
    out
}

/// "P conn Q" becomes "Q conn P"; a leading "Conn P, Q" becomes "Conn Q, P".
fn swap_clauses(caption: &str, connectives: &[&str]) -> Option<String> {
    let (body, terminal) = split_terminal(caption);
    let lower = body.to_lowercase();
    let capital = body.starts_with(|c: char| c.is_uppercase());
    let finish = |s: String| {
        let s = if capital { capitalize(&s) } else { s };
        format!("{s}{terminal}")
    };

    for conn in connectives {
        if lower.starts_with(&format!("{conn} ")) {
            let rest = &body[conn.len() + 1..];
            let comma = rest.find(", ")?;
            let (p, q) = (&rest[..comma], &rest[comma + 2..]);
            if p.trim().is_empty() || q.trim().is_empty() {
                continue;
            }
            return Some(finish(format!("{} {}, {}", &body[..conn.len()], q.trim(), p.trim())));
        }
    }
    let mut best: Option<regex::Match> = None;
    for conn in connectives {
        if let Some(m) = phrase_re(conn).find_iter(body).find(|m| m.start() > 0) {
            if best.is_none_or(|b| m.start() < b.start()) {
                best = Some(m);
            }
        }
    }
    let m = best?;
    let left = body[..m.start()].trim_end_matches([' ', ',', ';']);
    let pre = &body[left.len()..m.start()];
    let after = &body[m.end()..];
    let right = after.trim_start_matches([' ', ',']);
    let post = &after[..after.len() - right.len()];
    if left.trim().is_empty() || right.trim().is_empty() {
        return None;
    }
    Some(finish(format!("{}{pre}{}{post}{}", decapitalize(right), m.as_str().to_lowercase(), decapitalize(left))))
}

fn negation_flip(caption: &str) -> Vec<String> {
    let mut out = Vec::new();
    let edits: &[(&str, &str)] = &[
        ("not any", "some"),
        ("no", ""),
        ("no", "some"),
        ("no", "many"),
        ("not", ""),
        ("never", "always"),
        ("without", "with"),
        ("nobody", "somebody"),
        ("nothing", "something"),
        ("isn't", "is"),
        ("aren't", "are"),
        ("doesn't", "does"),
        ("don't", "do"),
    ];
    for &(from, to) in edits {
        if let Some(s) = replace_first(caption, from, to) {
            out.push(tidy(&s));
        }
    }
    if contains_word(caption, "neither") && contains_word(caption, "nor") {
        if let Some(s) = replace_first(caption, "neither", "both").and_then(|s| replace_first(&s, "nor", "and")) {
            out.push(s);
        }
    }
    if out.is_empty() {
        out.extend(negate_clause(caption));
    }
    out
}

/// Collapses the double spaces left behind by deleting a word.
fn tidy(text: &str) -> String {
    let spaces = Regex::new(r" {2,}").expect("space pattern");
    let s = spaces.replace_all(text.trim_start(), " ").into_owned();
    if text.starts_with(|c: char| c.is_uppercase()) {
        capitalize(&s)
    } else {
        s
    }
}

/// Adds or removes one negation in a single clause.
fn negate_clause(clause: &str) -> Option<String> {
    for (from, to) in [("there are no", "there are"), ("there is no", "there is a"), ("not", ""), ("no", "")] {
        if let Some(s) = replace_first(clause, from, to) {
            return Some(tidy(&s));
        }
    }
    let nouns = find_nouns(clause);
    let there_is = Regex::new(r"(?i)\bthere is (also |indeed )?(an?) ").expect("pattern");
    if let Some(c) = there_is.captures(clause) {
        let whole = c.get(0).expect("match");
        if let Some((range, index, false)) = nouns.iter().find(|n| n.0.start >= whole.end()).cloned() {
            let plural = noun_table()[index].1;
            return Some(format!(
                "{}{}{plural}{}",
                &clause[..whole.start()],
                keep_case(whole.as_str(), "there are no "),
                &clause[range.end..]
            ));
        }
    }
    for aux in ["is", "are", "was", "were", "will", "can", "has", "have"] {
        if let Some(m) = phrase_re(aux).find(clause) {
            return Some(format!("{} not{}", &clause[..m.end()], &clause[m.end()..]));
        }
    }
    None
}

fn order_swap(caption: &str) -> Vec<String> {
    let mut out = Vec::new();
    for (from, to) in [("before", "after"), ("after", "before"), ("as soon as", "long before"), ("when", "before"), ("while", "before")] {
        if let Some(s) = replace_first(caption, from, to) {
            out.push(s);
        }
    }
    if contains_word(caption, "then") {
        out.extend(swap_clauses(caption, &["then"]));
    }
    out
}

fn degree_swap(caption: &str) -> Vec<String> {
    let mut out = Vec::new();
    for &(a, b) in DEGREE_PAIRS {
        for (from, to) in [(a, b), (b, a)] {
            if let Some(s) = replace_first(caption, from, to) {
                out.push(s);
            }
        }
    }
    let equal = Regex::new(r"(?i)\b(not\s+)?as\s+(\w+)\s+as\b").expect("pattern");
    if let Some(c) = equal.captures(caption) {
        let whole = c.get(0).expect("match");
        let adj = &c[2];
        let repl = if c.get(1).is_some() { format!("as {adj} as") } else { format!("not as {adj} as") };
        out.push(format!("{}{}{}", &caption[..whole.start()], keep_case(whole.as_str(), &repl), &caption[whole.end()..]));
    }
    out
}

fn comparison_reversal(caption: &str) -> Vec<String> {
    let mut out = Vec::new();
    let strict = Regex::new(r"(?i)\b(?:(more|less)\s+(\w+)|(\w+))\s+than\b").expect("pattern");
    if let Some(c) = strict.captures(caption) {
        let whole = c.get(0).expect("match");
        let base = match (c.get(2), c.get(3)) {
            (Some(adj), _) => Some(adj.as_str().to_string()),
            (None, Some(word)) => COMPARATIVES
                .iter()
                .find(|(cmp, _)| cmp.eq_ignore_ascii_case(word.as_str()))
                .map(|(_, base)| base.to_string()),
            _ => None,
        };
        if let Some(base) = base {
            let repl = format!("as {base} as");
            out.push(format!("{}{}{}", &caption[..whole.start()], keep_case(whole.as_str(), &repl), &caption[whole.end()..]));
        }
    }
    let equal = Regex::new(r"(?i)\b(not\s+)?as\s+(\w+)\s+as\b").expect("pattern");
    if let Some(c) = equal.captures(caption) {
        let whole = c.get(0).expect("match");
        let adj = c[2].to_ascii_lowercase();
        let comparatives: Vec<String> = match COMPARATIVES.iter().find(|(_, base)| *base == adj) {
            Some((cmp, _)) => {
                let opposite = DEGREE_PAIRS
                    .iter()
                    .find_map(|&(a, b)| if a == *cmp { Some(b) } else if b == *cmp { Some(a) } else { None });
                std::iter::once(cmp.to_string()).chain(opposite.map(str::to_string)).collect()
            }
            None => vec![format!("more {adj}"), format!("less {adj}")],
        };
        for cmp in comparatives {
            let repl = format!("{cmp} than");
            out.push(format!("{}{}{}", &caption[..whole.start()], keep_case(whole.as_str(), &repl), &caption[whole.end()..]));
        }
    }
    out
}

fn include_exclude_swap(caption: &str) -> Vec<String> {
    let mut out = Vec::new();
    for (from, to) in [
        ("including", "except for"),
        ("includes", "excludes"),
        ("include", "exclude"),
        ("such as", "except for"),
        ("except for", "including"),
        ("except", "including"),
        ("without", "with"),
        ("with", "without"),
    ] {
        if let Some(s) = replace_first(caption, from, to) {
            out.push(s);
        }
    }
    out
}

fn condition_inversion(caption: &str) -> Vec<String> {
    let mut out = Vec::new();
    let (body, terminal) = split_terminal(caption);
    let lower = body.to_lowercase();
    let leading = CONDITIONAL.iter().find(|c| lower.starts_with(&format!("{c} ")));
    let negated = match leading {
        // "If P, Q": the consequent follows the comma.
        Some(_) => body.find(", ").and_then(|i| {
            negate_clause(&body[i + 2..]).map(|q| format!("{}, {q}{terminal}", &body[..i]))
        }),
        None => {
            let only_if = phrase_re("only if").find(body);
            let mid = CONDITIONAL.iter().filter_map(|c| phrase_re(c).find(body)).min_by_key(|m| m.start());
            match (only_if, mid) {
                // "P only if Q": Q is necessary, so it plays the consequent.
                (Some(m), _) => negate_clause(&body[m.end()..]).map(|q| format!("{}{q}{terminal}", &body[..m.end()])),
                (None, Some(m)) => {
                    negate_clause(&body[..m.start()]).map(|p| format!("{p}{}{terminal}", &body[m.start()..]))
                }
                (None, None) => None,
            }
        }
    };
    out.extend(negated.map(|s| tidy(&s)));
    for (from, to) in [("only if", "unless"), ("if", "unless"), ("unless", "if"), ("provided that", "unless"), ("in case", "unless")] {
        if let Some(s) = replace_first(caption, from, to) {
            out.push(s);
            break;
        }
    }
    out
}

fn contrast_swap(caption: &str) -> Vec<String> {
    let mut out = Vec::new();
    let (body, terminal) = split_terminal(caption);
    if body.to_lowercase().starts_with("although ") {
        if let Some(i) = body.find(", ") {
            out.push(format!("{}, and {}{terminal}", capitalize(&body[9..i]), &body[i + 2..]));
        }
    }
    if caption.contains("; however, ") {
        out.push(caption.replacen("; however, ", ", and ", 1));
    }
    for (from, to) in [("but", "and"), ("whereas", "and"), ("while", "and"), ("in contrast", "likewise")] {
        if let Some(s) = replace_first(caption, from, to) {
            out.push(s);
        }
    }
    out
}
