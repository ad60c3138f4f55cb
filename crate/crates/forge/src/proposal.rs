//! Proposals and their review lifecycle.

use std::fmt;
use std::io::{BufRead, Write};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use logicclip_core::corpus::{ImageRef, SampleRecord, Scenario};
use logicclip_core::{CategorySet, LogicalCategory};

use crate::error::{ForgeError, Result};

pub const RULE_BASED: &str = "rule-based";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProposalStatus {
    Pending,
    Accepted,
    Rejected,
    Edited,
    /// Every backend and the rule-based fallback failed; never reviewable.
    Failed,
}

impl ProposalStatus {
    pub const ALL: [ProposalStatus; 5] = [
        ProposalStatus::Pending,
        ProposalStatus::Accepted,
        ProposalStatus::Rejected,
        ProposalStatus::Edited,
        ProposalStatus::Failed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProposalStatus::Pending => "pending",
            ProposalStatus::Accepted => "accepted",
            ProposalStatus::Rejected => "rejected",
            ProposalStatus::Edited => "edited",
            ProposalStatus::Failed => "failed",
        }
    }
}

impl fmt::Display for ProposalStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ProposalStatus {
    type Err = ForgeError;

    fn from_str(s: &str) -> Result<Self> {
        ProposalStatus::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| ForgeError::Decision(format!("unknown status {s:?}")))
    }
}

/// A reviewer's verdict on a pending proposal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
    Edit { texts: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub proposal_id: String,
    pub sample_id: String,
    pub source_caption: String,
    pub scenario: Scenario,
    pub logic_type: LogicalCategory,
    pub categories: CategorySet,
    pub image_ref: ImageRef,
    /// Hard negatives: 3, or 4 for medicine.
    pub candidates: Vec<String>,
    /// Medicine only: the option labeled 1, flagged correct.
    #[serde(default)]
    pub correct_option: Option<String>,
    /// Model name, or `rule-based` (with the reason when a fallback).
    pub backend: String,
    pub status: ProposalStatus,
    #[serde(default)]
    pub note: Option<String>,
    /// Replacement negatives when status is edited.
    #[serde(default)]
    pub edited: Option<Vec<String>>,
    pub created_ms: u64,
    pub updated_ms: u64,
    /// Last request sent to a backend, verbatim.
    #[serde(default)]
    pub request: Option<Value>,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

pub fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

impl Proposal {
    /// Options as shown to a reviewer, numbered from 1. For medicine the
    /// correct option comes first.
    pub fn labeled_options(&self) -> Vec<(usize, &str)> {
        self.correct_option
            .iter()
            .map(String::as_str)
            .chain(self.negatives().iter().map(String::as_str))
            .enumerate()
            .map(|(i, s)| (i + 1, s))
            .collect()
    }

    /// Current negatives: the edited ones if any.
    pub fn negatives(&self) -> &[String] {
        self.edited.as_deref().unwrap_or(&self.candidates)
    }

    /// Applies a decision. Only pending proposals move; edits must supply as
    /// many non-empty texts as there are candidates, none equal to the source.
    pub fn decide(&mut self, decision: &Decision, note: Option<String>, at_ms: u64) -> Result<()> {
        if self.status != ProposalStatus::Pending {
            return Err(ForgeError::Conflict { id: self.proposal_id.clone(), status: self.status.to_string() });
        }
        match decision {
            Decision::Accept => self.status = ProposalStatus::Accepted,
            Decision::Reject => self.status = ProposalStatus::Rejected,
            Decision::Edit { texts } => {
                validate_edit(texts, self.candidates.len(), &self.positive())?;
                self.edited = Some(texts.iter().map(|t| t.trim().to_string()).collect());
                self.status = ProposalStatus::Edited;
            }
        }
        self.note = note;
        self.updated_ms = at_ms;
        Ok(())
    }

    /// The caption that counts as correct in the finished record.
    pub fn positive(&self) -> String {
        self.correct_option.clone().unwrap_or_else(|| self.source_caption.clone())
    }

    /// Accepted and edited proposals become corpus records.
    pub fn to_sample_record(&self) -> Option<SampleRecord> {
        if !matches!(self.status, ProposalStatus::Accepted | ProposalStatus::Edited) {
            return None;
        }
        let negatives = self.negatives().to_vec();
        Some(SampleRecord {
            sample_id: self.sample_id.clone(),
            scenario: self.scenario,
            image_ref: self.image_ref.clone(),
            positive: self.positive(),
            option_count: 1 + negatives.len(),
            negatives,
            categories: self.categories,
        })
    }
}

fn validate_edit(texts: &[String], expected: usize, positive: &str) -> Result<()> {
    if texts.len() != expected {
        return Err(ForgeError::Decision(format!("edit needs {expected} texts, got {}", texts.len())));
    }
    for (i, t) in texts.iter().enumerate() {
        let t = t.trim();
        if t.is_empty() {
            return Err(ForgeError::Decision(format!("edited text {} is empty", i + 1)));
        }
        if t == positive {
            return Err(ForgeError::Decision(format!("edited text {} repeats the correct caption", i + 1)));
        }
    }
    Ok(())
}

/// One proposal per line, JSON.
pub fn write_proposals<W: Write>(mut out: W, proposals: &[Proposal]) -> Result<()> {
    for p in proposals {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_proposals<R: BufRead>(input: R) -> Result<Vec<Proposal>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
