use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::metrics::{cosine, Embedder};
use crate::corpus::caption::{realize, template_count, Degree, InclusionMode, LogicForm};
use crate::error::{Error, Result};
use crate::taxonomy::LogicalCategory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeText {
    pub category: LogicalCategory,
    pub text: String,
}

/// The form every variant of `category` realizes. All noun categories share
/// one pair of nouns and both event categories one pair of events, so
/// variants differ only in their logical words.
pub fn probe_form(category: LogicalCategory) -> LogicForm {
    use LogicalCategory::*;
    let (a, b) = ("basket".to_string(), "sandwich".to_string());
    let (e, f) = ("rain".to_string(), "wet_ground".to_string());
    match category {
        Conjunction => LogicForm::Conjunction { a, b },
        Disjunction => LogicForm::Disjunction { a, b },
        Negation => LogicForm::Negation { noun: b },
        Contrast => LogicForm::Contrast { present: a, absent: b },
        Comparison => LogicForm::Comparison { a, b, degree: Degree::Greater },
        Condition => LogicForm::Condition { antecedent: a, consequent: b, negated_consequent: false },
        Causality => LogicForm::Causality { cause: e, effect: f },
        Temporality => LogicForm::Temporality { earlier: e, later: f },
        Inclusion => LogicForm::Inclusion { container: a, item: b, mode: InclusionMode::Including },
    }
}

/// [`probe_form`] rendered with every surface template of its category.
pub fn default_battery() -> Vec<ProbeText> {
    let mut out = Vec::new();
    for category in LogicalCategory::ALL {
        let form = probe_form(category);
        for t in 0..template_count(category) {
            out.push(ProbeText { category, text: realize(&form, t) });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPoint {
    pub text: String,
    pub category: LogicalCategory,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityReport {
    pub purity: f64,
    pub projection: Vec<ProjectedPoint>,
}

/// Assigns each embedding to the category centroid with the highest cosine
/// (lowest category index on ties) and returns the fraction assigned to
/// their own category. An embedding's own centroid leaves it out, so a
/// category needs at least two members to be matched at all.
pub fn centroid_purity(embeddings: &[Vec<f64>], categories: &[LogicalCategory]) -> f64 {
    let dim = embeddings.first().map_or(0, Vec::len);
    let present: Vec<LogicalCategory> =
        LogicalCategory::ALL.into_iter().filter(|c| categories.contains(c)).collect();
    let sums: Vec<(Vec<f64>, usize)> = present
        .iter()
        .map(|c| {
            let mut sum = vec![0.0; dim];
            let mut n = 0;
            for (e, _) in embeddings.iter().zip(categories).filter(|(_, k)| *k == c) {
                for (s, v) in sum.iter_mut().zip(e) {
                    *s += v;
                }
                n += 1;
            }
            (sum, n)
        })
        .collect();
    let mut hits = 0;
    for (e, c) in embeddings.iter().zip(categories) {
        let mut best = (f64::NEG_INFINITY, None);
        for (k, (sum, n)) in sums.iter().enumerate() {
            let centroid: Vec<f64> = if present[k] == *c {
                if *n < 2 {
                    continue;
                }
                sum.iter().zip(e).map(|(s, v)| (s - v) / (n - 1) as f64).collect()
            } else {
                sum.iter().map(|s| s / *n as f64).collect()
            };
            let s = cosine(e, &centroid);
            if s > best.0 {
                best = (s, Some(k));
            }
        }
        hits += usize::from(best.1.is_some_and(|k| present[k] == *c));
    }
    hits as f64 / embeddings.len().max(1) as f64
}

/// Projection onto the top two principal directions of the centred data.
/// Each direction's sign is fixed so its largest-magnitude entry is positive.
pub fn principal_projection(embeddings: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let n = embeddings.len();
    let dim = embeddings.first().map_or(0, Vec::len);
    if n == 0 || dim == 0 {
        return vec![(0.0, 0.0); n];
    }
    let mean: Vec<f64> = (0..dim).map(|j| embeddings.iter().map(|e| e[j]).sum::<f64>() / n as f64).collect();
    let centred = DMatrix::from_fn(n, dim, |i, j| embeddings[i][j] - mean[j]);
    let cov = centred.transpose() * &centred / n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let axis = |k: usize| -> Vec<f64> {
        let Some(&col) = order.get(k) else {
            return vec![0.0; dim];
        };
        let v: Vec<f64> = eig.eigenvectors.column(col).iter().copied().collect();
        let lead = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if lead < 0.0 {
            v.into_iter().map(|x| -x).collect()
        } else {
            v
        }
    };
    let (u, w) = (axis(0), axis(1));
    (0..n)
        .map(|i| {
            let row = centred.row(i);
            let x = row.iter().zip(&u).map(|(a, b)| a * b).sum();
            let y = row.iter().zip(&w).map(|(a, b)| a * b).sum();
            (x, y)
        })
        .collect()
}

pub fn cluster_purity(model: &impl Embedder, battery: &[ProbeText]) -> Result<PurityReport> {
    for c in LogicalCategory::ALL {
        let n = battery.iter().filter(|p| p.category == c).count();
        if n < 2 {
            return Err(Error::Battery(format!("{c} has {n} variants, need at least 2")));
        }
    }
    let embeddings = battery.iter().map(|p| model.embed_text(&p.text)).collect::<Result<Vec<_>>>()?;
    let categories: Vec<LogicalCategory> = battery.iter().map(|p| p.category).collect();
    let purity = centroid_purity(&embeddings, &categories);
    let projection = principal_projection(&embeddings)
        .into_iter()
        .zip(battery)
        .map(|((x, y), p)| ProjectedPoint { text: p.text.clone(), category: p.category, x, y })
        .collect();
    Ok(PurityReport { purity, projection })
}

/// Tab-separated `text, category, x, y` with a header row.
pub fn write_projection_tsv<W: Write>(mut out: W, points: &[ProjectedPoint]) -> Result<()> {
    writeln!(out, "text\tcategory\tx\ty")?;
    for p in points {
        writeln!(out, "{}\t{}\t{}\t{}", p.text.replace('\t', " "), p.category, p.x, p.y)?;
    }
    Ok(())
}
