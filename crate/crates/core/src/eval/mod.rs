//! MCQ accuracy, Recall@K, per-category reports, the perturbation gap,
//! logic-head F1 and embedding cluster purity.

mod logic_head;
mod metrics;
mod purity;
mod report;

pub use logic_head::{logic_head_f1, macro_f1, predict_categories, Confusion, LogicF1};
pub use metrics::{
    cosine, mcq_accuracy, mcq_outcome, mcq_outcomes, option_permutation, perturbation_gaps, ranks,
    recall_from_ranks, retrieval_ranks, retrieval_recall, summarize_gaps, Direction, Embedder, GapSummary,
    McqOutcome,
};
pub use purity::{
    centroid_purity, cluster_purity, default_battery, principal_projection, probe_form, write_projection_tsv,
    ProbeText, ProjectedPoint, PurityReport,
};
pub use report::{evaluate, evaluate_embedder, EvalConfig, EvalReport, MetricRow, ScenarioReport};
