//! Hard-negative caption proposals.
//!
//! A [`Forge`] asks chat-completion backends for negatives using the
//! per-scenario instruction templates, parses the numbered lists they return,
//! and falls back to deterministic rule-based perturbations when a backend
//! keeps failing. Results are [`Proposal`]s awaiting human review.

pub mod backend;
pub mod error;
pub mod forge;
pub mod parse;
pub mod proposal;
pub mod rules;
pub mod template;

pub use backend::{BackendProfile, ChatBackend, HttpBackend};
pub use error::{ForgeError, ParseFailure, Result};
pub use forge::{Forge, RetryPolicy};
pub use parse::{parse_llm_response, render_numbered, ParsedList};
pub use proposal::{Decision, Proposal, ProposalStatus, RULE_BASED};
pub use rules::{perturb_n, perturb_rule_based};
pub use template::{build_prompt, PromptTemplate};
