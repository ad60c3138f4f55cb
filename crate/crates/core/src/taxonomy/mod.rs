//! The nine logical categories and the rule-based caption detector.

mod rules;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use rules::{
    detect_categories, filter_positive, stem, tokenize, AnnotatedCaption, CaptionInput,
    FilterSummary, PatternKind, RulePattern, RuleTable, DEFAULT_MAX_GAP,
};

use crate::error::{Error, Result};

/// One of the nine logical relations. The discriminant is the stable index
/// used for multi-hot labels and the logic head output columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogicalCategory {
    Conjunction = 0,
    Disjunction = 1,
    Negation = 2,
    Contrast = 3,
    Comparison = 4,
    Condition = 5,
    Causality = 6,
    Temporality = 7,
    Inclusion = 8,
}

impl LogicalCategory {
    pub const COUNT: usize = 9;

    pub const ALL: [LogicalCategory; 9] = [
        LogicalCategory::Conjunction,
        LogicalCategory::Disjunction,
        LogicalCategory::Negation,
        LogicalCategory::Contrast,
        LogicalCategory::Comparison,
        LogicalCategory::Condition,
        LogicalCategory::Causality,
        LogicalCategory::Temporality,
        LogicalCategory::Inclusion,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            LogicalCategory::Conjunction => "conjunction",
            LogicalCategory::Disjunction => "disjunction",
            LogicalCategory::Negation => "negation",
            LogicalCategory::Contrast => "contrast",
            LogicalCategory::Comparison => "comparison",
            LogicalCategory::Condition => "condition",
            LogicalCategory::Causality => "causality",
            LogicalCategory::Temporality => "temporality",
            LogicalCategory::Inclusion => "inclusion",
        }
    }

    /// Perturbation kinds used to build hard negatives for this category.
    /// Shared by the synthetic caption generator and the rule-based forge.
    pub fn flip_family(self) -> &'static [FlipKind] {
        use FlipKind::*;
        match self {
            LogicalCategory::Conjunction => &[ConnectiveSwap, OperandSubstitution, OperandSwap],
            LogicalCategory::Disjunction => &[ConnectiveSwap, OperandSubstitution, OperandSwap],
            LogicalCategory::Negation => &[NegationFlip, OperandSubstitution],
            LogicalCategory::Contrast => &[ContrastConjunctionSwap, OperandSubstitution, OperandSwap],
            LogicalCategory::Comparison => &[DegreeSwap, ComparisonReversal, OperandSubstitution],
            LogicalCategory::Condition => &[ConditionInversion, OperandSubstitution, OperandSwap],
            LogicalCategory::Causality => &[CauseEffectSwap, OperandSubstitution],
            LogicalCategory::Temporality => &[OrderSwap, OperandSubstitution, OperandSwap],
            LogicalCategory::Inclusion => &[IncludeExcludeSwap, OperandSubstitution],
        }
    }
}

impl fmt::Display for LogicalCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LogicalCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name() == lower)
            .ok_or_else(|| Error::UnknownCategory(s.to_string()))
    }
}

/// A minimal logical perturbation. Each category draws its negatives from
/// one family of these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipKind {
    /// and <-> or
    ConnectiveSwap,
    /// Replace one operand with something that makes the statement false.
    OperandSubstitution,
    /// Exchange the two operands around the connective.
    OperandSwap,
    /// Add or remove a negator.
    NegationFlip,
    /// Reverse the direction of a causal link.
    CauseEffectSwap,
    /// before <-> after
    OrderSwap,
    /// more <-> less, bigger <-> smaller
    DegreeSwap,
    /// Strict comparison <-> equality (as ... as).
    ComparisonReversal,
    /// including <-> except for / without
    IncludeExcludeSwap,
    /// Negate the consequent of a conditional.
    ConditionInversion,
    /// but <-> and
    ContrastConjunctionSwap,
}

/// Multi-hot label over the nine categories.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct CategorySet([bool; LogicalCategory::COUNT]);

impl CategorySet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_bits(bits: [bool; LogicalCategory::COUNT]) -> Self {
        Self(bits)
    }

    pub fn insert(&mut self, category: LogicalCategory) {
        self.0[category.index()] = true;
    }

    pub fn contains(&self, category: LogicalCategory) -> bool {
        self.0[category.index()]
    }

    pub fn is_empty(&self) -> bool {
        !self.0.iter().any(|&b| b)
    }

    pub fn len(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn bits(&self) -> [bool; LogicalCategory::COUNT] {
        self.0
    }

    /// Labels as 0.0 / 1.0 targets for the logic head.
    pub fn as_targets(&self) -> [f64; LogicalCategory::COUNT] {
        self.0.map(|b| if b { 1.0 } else { 0.0 })
    }

    pub fn iter(&self) -> impl Iterator<Item = LogicalCategory> + '_ {
        LogicalCategory::ALL.iter().copied().filter(|c| self.contains(*c))
    }

    pub fn union(&self, other: &CategorySet) -> CategorySet {
        let mut out = *self;
        for c in other.iter() {
            out.insert(c);
        }
        out
    }
}

impl FromIterator<LogicalCategory> for CategorySet {
    fn from_iter<I: IntoIterator<Item = LogicalCategory>>(iter: I) -> Self {
        let mut set = CategorySet::empty();
        for c in iter {
            set.insert(c);
        }
        set
    }
}

impl fmt::Display for CategorySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(|c| c.name()).collect();
        write!(f, "{{{}}}", names.join(", "))
    }
}

// Serialized as the list of category names in index order.
impl Serialize for CategorySet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let names: Vec<LogicalCategory> = self.iter().collect();
        names.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CategorySet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let names = Vec::<LogicalCategory>::deserialize(deserializer)?;
        Ok(names.into_iter().collect())
    }
}
