//! Logic-aware contrastive dual encoder.
//!
//! * [`taxonomy`]: nine logical categories and the rule-based caption detector.
//! * [`corpus`]: sample records, their file format and a synthetic scene
//!   generator whose captions carry known truth values.
//! * [`encoder`]: text/image encoders, the contrastive, multiple-choice and
//!   logic-classification losses with analytic gradients, and AdamW training.
//! * [`eval`]: MCQ accuracy, Recall@K, per-category reports, perturbation gap
//!   and embedding cluster purity.

pub mod corpus;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod par;
pub mod taxonomy;

pub use error::{Error, Result};
pub use par::ExecMode;
pub use taxonomy::{detect_categories, CategorySet, LogicalCategory};
