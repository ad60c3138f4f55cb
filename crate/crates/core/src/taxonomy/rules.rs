use std::collections::BTreeMap;
use std::sync::OnceLock;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{CategorySet, LogicalCategory};
use crate::error::{Error, Result};

/// Maximum number of tokens allowed between the parts of a gap pattern.
pub const DEFAULT_MAX_GAP: usize = 8;

const DEFAULT_TABLE: &str = include_str!("../../data/rules.tsv");

/// Lowercased word tokens split on non-letter boundaries.
pub fn tokenize(text: &str) -> Vec<String> {
    scan(text).into_iter().map(|t| t.text).collect()
}

#[derive(Debug, Clone)]
struct ScannedToken {
    text: String,
    /// A comma, semicolon or colon sits between this token and the previous one.
    after_break: bool,
}

fn scan(text: &str) -> Vec<ScannedToken> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut saw_break = false;
    for ch in text.chars() {
        if ch.is_alphabetic() {
            current.extend(ch.to_lowercase());
        } else {
            if !current.is_empty() {
                out.push(ScannedToken { text: std::mem::take(&mut current), after_break: saw_break });
                saw_break = false;
            }
            if matches!(ch, ',' | ';' | ':') {
                saw_break = true;
            }
        }
    }
    if !current.is_empty() {
        out.push(ScannedToken { text: current, after_break: saw_break });
    }
    out
}

/// Fixed suffix-strip stemmer used for `stem` rules.
pub fn stem(token: &str) -> &str {
    const SUFFIXES: [&str; 5] = ["ing", "ed", "es", "s", "e"];
    for suffix in SUFFIXES {
        if let Some(root) = token.strip_suffix(suffix) {
            if root.chars().count() >= 4 {
                return root;
            }
        }
    }
    token
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternKind {
    Single,
    Stem,
    Clause,
    Multi,
}

impl PatternKind {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "single" => Some(PatternKind::Single),
            "stem" => Some(PatternKind::Stem),
            "clause" => Some(PatternKind::Clause),
            "multi" => Some(PatternKind::Multi),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RulePattern {
    pub category: LogicalCategory,
    pub kind: PatternKind,
    /// Contiguous segments; consecutive segments may be separated by up to
    /// `max_gap` tokens.
    pub parts: Vec<Vec<String>>,
    pub max_gap: usize,
}

impl RulePattern {
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.parts.iter().flatten().map(String::as_str)
    }

    fn key(&self) -> String {
        self.parts.iter().map(|p| p.join(" ")).collect::<Vec<_>>().join(" … ")
    }
}

/// Patterns sharing the same surface form, with every category they activate.
#[derive(Debug, Clone)]
struct Matcher {
    kind: PatternKind,
    parts: Vec<Vec<String>>,
    max_gap: usize,
    categories: CategorySet,
}

#[derive(Debug, Clone)]
pub struct RuleTable {
    version: u32,
    patterns: Vec<RulePattern>,
    multi: Vec<Matcher>,
    single: Vec<Matcher>,
}

impl RuleTable {
    /// The bundled table.
    pub fn default_table() -> &'static RuleTable {
        static TABLE: OnceLock<RuleTable> = OnceLock::new();
        TABLE.get_or_init(|| RuleTable::parse(DEFAULT_TABLE).expect("bundled rule table is valid"))
    }

    pub fn parse(text: &str) -> Result<RuleTable> {
        let mut version = 0;
        let mut patterns = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if let Some(comment) = line.trim_start().strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("version:") {
                    version = v.trim().parse().map_err(|_| Error::RuleTable {
                        line: lineno + 1,
                        reason: format!("bad version {:?}", v.trim()),
                    })?;
                }
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::RuleTable {
                    line: lineno + 1,
                    reason: format!("expected 3 tab-separated fields, got {}", fields.len()),
                });
            }
            let category: LogicalCategory = fields[0].parse().map_err(|_| Error::RuleTable {
                line: lineno + 1,
                reason: format!("unknown category {:?}", fields[0]),
            })?;
            let kind = PatternKind::parse(fields[1].trim()).ok_or_else(|| Error::RuleTable {
                line: lineno + 1,
                reason: format!("unknown kind {:?}", fields[1]),
            })?;
            let parts: Vec<Vec<String>> = fields[2]
                .replace("...", "…")
                .split('…')
                .map(|seg| seg.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>())
                .collect();
            if parts.iter().any(Vec::is_empty) {
                return Err(Error::RuleTable { line: lineno + 1, reason: "empty pattern part".into() });
            }
            let literal: usize = parts.iter().map(Vec::len).sum();
            if kind != PatternKind::Multi && literal != 1 {
                return Err(Error::RuleTable {
                    line: lineno + 1,
                    reason: format!("{:?} pattern must be one token", kind),
                });
            }
            if kind == PatternKind::Multi && literal < 2 {
                return Err(Error::RuleTable {
                    line: lineno + 1,
                    reason: "multi pattern needs at least two tokens".into(),
                });
            }
            patterns.push(RulePattern { category, kind, parts, max_gap: DEFAULT_MAX_GAP });
        }
        Ok(Self::compile(version, patterns))
    }

    fn compile(version: u32, patterns: Vec<RulePattern>) -> RuleTable {
        // Group by surface form so a shared keyword fires every listed category.
        let mut grouped: BTreeMap<(u8, String), (usize, Matcher)> = BTreeMap::new();
        for (order, p) in patterns.iter().enumerate() {
            let kind_tag = p.kind as u8;
            let entry = grouped.entry((kind_tag, p.key())).or_insert_with(|| {
                (
                    order,
                    Matcher {
                        kind: p.kind,
                        parts: p.parts.clone(),
                        max_gap: p.max_gap,
                        categories: CategorySet::empty(),
                    },
                )
            });
            entry.1.categories.insert(p.category);
        }
        let mut matchers: Vec<(usize, Matcher)> = grouped.into_values().collect();
        matchers.sort_by_key(|(order, _)| *order);
        let (mut multi, single): (Vec<_>, Vec<_>) = matchers
            .into_iter()
            .map(|(_, m)| m)
            .partition(|m| m.kind == PatternKind::Multi);
        // Longer patterns claim tokens first; contiguous before gapped on ties.
        multi.sort_by(|a, b| {
            let la: usize = a.parts.iter().map(Vec::len).sum();
            let lb: usize = b.parts.iter().map(Vec::len).sum();
            lb.cmp(&la).then(a.parts.len().cmp(&b.parts.len()))
        });
        RuleTable { version, patterns, multi, single }
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn patterns(&self) -> &[RulePattern] {
        &self.patterns
    }

    pub fn detect(&self, text: &str) -> CategorySet {
        let tokens = scan(text);
        let mut consumed = vec![false; tokens.len()];
        let mut found = CategorySet::empty();

        for m in &self.multi {
            let mut start = 0;
            while start < tokens.len() {
                match match_multi(m, &tokens, &consumed, start) {
                    Some(positions) => {
                        for &p in &positions {
                            consumed[p] = true;
                        }
                        found = found.union(&m.categories);
                        start = positions[0] + 1;
                    }
                    None => start += 1,
                }
            }
        }

        for (i, tok) in tokens.iter().enumerate() {
            if consumed[i] {
                continue;
            }
            for m in &self.single {
                let keyword = &m.parts[0][0];
                let hit = match m.kind {
                    PatternKind::Single => tok.text == *keyword,
                    PatternKind::Stem => stem(&tok.text) == stem(keyword),
                    PatternKind::Clause => {
                        tok.text == *keyword
                            && i > 0
                            && i + 1 < tokens.len()
                            && (tok.after_break
                                || matches!(tokens[i - 1].text.as_str(), "and" | "but" | "or"))
                    }
                    PatternKind::Multi => unreachable!(),
                };
                if hit {
                    found = found.union(&m.categories);
                }
            }
        }
        found
    }
}

fn segment_at(part: &[String], tokens: &[ScannedToken], consumed: &[bool], at: usize) -> bool {
    at + part.len() <= tokens.len()
        && part
            .iter()
            .enumerate()
            .all(|(k, word)| !consumed[at + k] && tokens[at + k].text == *word)
}

/// Matches `m` with its first segment anchored at `start`. Later segments
/// take the earliest position within the gap window.
fn match_multi(
    m: &Matcher,
    tokens: &[ScannedToken],
    consumed: &[bool],
    start: usize,
) -> Option<Vec<usize>> {
    if !segment_at(&m.parts[0], tokens, consumed, start) {
        return None;
    }
    let mut positions: Vec<usize> = (start..start + m.parts[0].len()).collect();
    let mut cursor = start + m.parts[0].len();
    for part in &m.parts[1..] {
        let last = (cursor + m.max_gap).min(tokens.len());
        let at = (cursor..=last).find(|&p| segment_at(part, tokens, consumed, p))?;
        positions.extend(at..at + part.len());
        cursor = at + part.len();
    }
    Some(positions)
}

/// Detect with the bundled rule table.
pub fn detect_categories(text: &str) -> CategorySet {
    RuleTable::default_table().detect(text)
}

/// Raw record for positive filtering: an image reference plus caption text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionInput {
    pub image_ref: String,
    pub caption: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedCaption {
    pub image_ref: String,
    pub caption: String,
    pub categories: CategorySet,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterSummary {
    pub kept: usize,
    pub no_logic: usize,
    pub malformed: usize,
}

/// Keeps line-delimited caption records whose text carries at least one
/// logical category. Malformed lines are skipped and counted.
pub fn filter_positive<I, S>(lines: I, table: &RuleTable) -> (Vec<AnnotatedCaption>, FilterSummary)
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut kept = Vec::new();
    let mut summary = FilterSummary::default();
    for (lineno, line) in lines.into_iter().enumerate() {
        let line = line.as_ref();
        if line.trim().is_empty() {
            continue;
        }
        let input: CaptionInput = match serde_json::from_str(line) {
            Ok(input) => input,
            Err(e) => {
                warn!("skipping malformed caption record on line {}: {}", lineno + 1, e);
                summary.malformed += 1;
                continue;
            }
        };
        if input.caption.trim().is_empty() || input.image_ref.trim().is_empty() {
            warn!("skipping caption record on line {} with empty fields", lineno + 1);
            summary.malformed += 1;
            continue;
        }
        let categories = table.detect(&input.caption);
        if categories.is_empty() {
            summary.no_logic += 1;
            continue;
        }
        summary.kept += 1;
        kept.push(AnnotatedCaption { image_ref: input.image_ref, caption: input.caption, categories });
    }
    (kept, summary)
}
