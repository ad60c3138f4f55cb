use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::logic_head::logic_head_f1;
use super::metrics::{
    mcq_outcomes, perturbation_gaps, retrieval_ranks, summarize_gaps, Direction, Embedder,
    GapSummary,
};
use super::purity::{cluster_purity, default_battery};
use crate::corpus::{SampleRecord, Scenario};
use crate::encoder::Model;
use crate::error::Result;
use crate::par::ExecMode;
use crate::taxonomy::LogicalCategory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub shuffle_seed: u64,
    pub direction: Direction,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { shuffle_seed: 0, direction: Direction::TextToImage }
    }
}

/// Metrics over one subset of records. Absent metrics mean the subset was
/// empty (or, for recall, the pool was smaller than k).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub count: usize,
    pub mcq_accuracy: Option<f64>,
    pub mcq_ties: usize,
    pub recall_at_1: Option<f64>,
    pub recall_at_5: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub pool_size: usize,
    pub overall: MetricRow,
    pub categories: Vec<(LogicalCategory, MetricRow)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: usize,
    pub scenarios: Vec<ScenarioReport>,
    pub perturbation: GapSummary,
    pub cluster_purity: Option<f64>,
    pub logic_head_macro_f1: Option<f64>,
}

struct Outcome {
    correct: bool,
    tie: bool,
    rank: usize,
}

fn row(outcomes: &[&Outcome], pool: usize) -> MetricRow {
    let n = outcomes.len();
    let frac = |hits: usize| (n > 0).then(|| hits as f64 / n as f64);
    let recall = |k: usize| {
        if n == 0 || pool < k {
            None
        } else {
            frac(outcomes.iter().filter(|o| o.rank < k).count())
        }
    };
    MetricRow {
        count: n,
        mcq_accuracy: frac(outcomes.iter().filter(|o| o.correct).count()),
        mcq_ties: outcomes.iter().filter(|o| o.tie).count(),
        recall_at_1: recall(1),
        recall_at_5: recall(5),
    }
}

/// Per-scenario and per-category MCQ and recall, plus the perturbation gap.
/// Retrieval pools are per scenario; category rows use the subset's queries
/// against the full scenario pool.
pub fn evaluate_embedder(
    model: &impl Embedder,
    records: &[SampleRecord],
    config: &EvalConfig,
    mode: ExecMode,
) -> Result<EvalReport> {
    let mut scenarios = Vec::new();
    for scenario in Scenario::ALL {
        let subset: Vec<SampleRecord> = records.iter().filter(|r| r.scenario == scenario).cloned().collect();
        if subset.is_empty() {
            continue;
        }
        let mcq = mcq_outcomes(model, &subset, config.shuffle_seed, mode)?;
        let (ranks, pool) = retrieval_ranks(model, &subset, config.direction, mode)?;
        let outcomes: Vec<Outcome> = mcq
            .iter()
            .zip(&ranks)
            .map(|(m, &rank)| Outcome { correct: m.correct, tie: m.tie, rank })
            .collect();
        let overall = row(&outcomes.iter().collect::<Vec<_>>(), pool);
        let categories = LogicalCategory::ALL
            .iter()
            .map(|&c| {
                let members: Vec<&Outcome> =
                    outcomes.iter().zip(&subset).filter(|(_, r)| r.categories.contains(c)).map(|(o, _)| o).collect();
                (c, row(&members, pool))
            })
            .collect();
        scenarios.push(ScenarioReport { scenario, pool_size: pool, overall, categories });
    }
    let gaps = perturbation_gaps(model, records, mode)?;
    Ok(EvalReport {
        records: records.len(),
        scenarios,
        perturbation: summarize_gaps(&gaps),
        cluster_purity: None,
        logic_head_macro_f1: None,
    })
}

/// Full report for a trained model, including cluster purity on the default
/// battery and logic-head macro-F1 over every caption in `records`.
pub fn evaluate(model: &Model, records: &[SampleRecord], config: &EvalConfig, mode: ExecMode) -> Result<EvalReport> {
    let mut report = evaluate_embedder(model, records, config, mode)?;
    report.cluster_purity = Some(cluster_purity(model, &default_battery())?.purity);
    report.logic_head_macro_f1 = logic_head_f1(model, records)?.macro_f1;
    Ok(report)
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ReportLine<'a> {
    Row { scenario: Scenario, category: Option<LogicalCategory>, #[serde(flatten)] metrics: &'a MetricRow },
    Summary { records: usize, perturbation: GapSummary, cluster_purity: Option<f64>, logic_head_macro_f1: Option<f64> },
}

impl EvalReport {
    /// One JSON document per row, then a summary line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for s in &self.scenarios {
            let line = ReportLine::Row { scenario: s.scenario, category: None, metrics: &s.overall };
            writeln!(out, "{}", serde_json::to_string(&line)?)?;
            for (c, m) in &s.categories {
                let line = ReportLine::Row { scenario: s.scenario, category: Some(*c), metrics: m };
                writeln!(out, "{}", serde_json::to_string(&line)?)?;
            }
        }
        let summary = ReportLine::Summary {
            records: self.records,
            perturbation: self.perturbation,
            cluster_purity: self.cluster_purity,
            logic_head_macro_f1: self.logic_head_macro_f1,
        };
        writeln!(out, "{}", serde_json::to_string(&summary)?)?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn table(&self) -> String {
        let pct = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{:.1}", 100.0 * x));
        let mut s = String::new();
        for sc in &self.scenarios {
            let _ = writeln!(s, "{} (pool {})", sc.scenario, sc.pool_size);
            let _ = writeln!(s, "  {:<12} {:>6} {:>7} {:>7} {:>7}", "subset", "n", "MCQ", "R@1", "R@5");
            let mut line = |name: &str, m: &MetricRow| {
                let _ = writeln!(
                    s,
                    "  {:<12} {:>6} {:>7} {:>7} {:>7}",
                    name,
                    m.count,
                    pct(m.mcq_accuracy),
                    pct(m.recall_at_1),
                    pct(m.recall_at_5)
                );
            };
            line("all", &sc.overall);
            for (c, m) in &sc.categories {
                line(c.name(), m);
            }
        }
        let _ = writeln!(
            s,
            "perturbation gap {:.4}, blindspot rate {}",
            self.perturbation.mean_gap,
            pct(Some(self.perturbation.blindspot_rate))
        );
        if let Some(p) = self.cluster_purity {
            let _ = writeln!(s, "cluster purity {p:.3}");
        }
        if let Some(f) = self.logic_head_macro_f1 {
            let _ = writeln!(s, "logic head macro-F1 {f:.3}");
        }
        s
    }
}
