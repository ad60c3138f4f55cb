use serde::{Deserialize, Serialize};

use crate::corpus::SampleRecord;
use crate::encoder::Model;
use crate::error::Result;
use crate::taxonomy::{detect_categories, CategorySet, LogicalCategory};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Confusion {
    /// `None` when the category is neither present nor predicted.
    pub fn f1(&self) -> Option<f64> {
        let denom = 2 * self.tp + self.fp + self.fn_;
        (denom > 0).then(|| 2.0 * self.tp as f64 / denom as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogicF1 {
    pub per_category: Vec<(LogicalCategory, Confusion)>,
    /// Mean F1 over categories where it is defined.
    pub macro_f1: Option<f64>,
}

/// Multi-label scores from (predicted, gold) pairs.
pub fn macro_f1(pairs: &[(CategorySet, CategorySet)]) -> LogicF1 {
    let per_category: Vec<(LogicalCategory, Confusion)> = LogicalCategory::ALL
        .iter()
        .map(|&c| {
            let mut m = Confusion::default();
            for (pred, gold) in pairs {
                match (pred.contains(c), gold.contains(c)) {
                    (true, true) => m.tp += 1,
                    (true, false) => m.fp += 1,
                    (false, true) => m.fn_ += 1,
                    (false, false) => {}
                }
            }
            (c, m)
        })
        .collect();
    let defined: Vec<f64> = per_category.iter().filter_map(|(_, m)| m.f1()).collect();
    let macro_f1 = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    LogicF1 { per_category, macro_f1 }
}

/// Categories whose logic-head probability is at least 0.5.
pub fn predict_categories(model: &Model, text: &str) -> Result<CategorySet> {
    let scores = model.logic_scores(text)?;
    Ok(LogicalCategory::ALL.into_iter().filter(|c| scores[c.index()] >= 0.0).collect())
}

/// Logic-head F1 over every caption (positives and negatives) of `records`,
/// against rule-detected labels.
pub fn logic_head_f1(model: &Model, records: &[SampleRecord]) -> Result<LogicF1> {
    let mut pairs = Vec::new();
    for r in records {
        for text in r.options() {
            pairs.push((predict_categories(model, text)?, detect_categories(text)));
        }
    }
    Ok(macro_f1(&pairs))
}
