//! File-backed review store: an append-only event log plus a periodic
//! snapshot of every proposal.
//!
//! Directory layout:
//!
//! - `events.jsonl`: one event per line, numbered from 1, fsynced before the
//!   change becomes visible.
//! - `snapshot.json`: state after event `seq`, replaced atomically.
//!
//! Opening loads the snapshot and replays every later event. A final line
//! without its newline is a write cut short by a crash and is dropped; any
//! other unreadable line is an error.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use logicclip_core::corpus::{save_records, CorpusConfig, Manifest, SampleRecord};
use logicclip_forge::{Decision, Proposal, ProposalStatus};

use crate::error::{CliError, Result};

const EVENTS: &str = "events.jsonl";
const SNAPSHOT: &str = "snapshot.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Event {
    Created { proposal: Box<Proposal> },
    Decided { proposal_id: String, decision: Decision, note: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedEvent {
    pub seq: u64,
    pub at_ms: u64,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug, Serialize, Deserialize)]
struct Snapshot {
    seq: u64,
    proposals: Vec<Proposal>,
}

/// Counts by status.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub total: usize,
    pub pending: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub edited: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalizeSummary {
    pub path: String,
    pub records: usize,
    pub stats: Stats,
}

pub struct ReviewStore {
    dir: PathBuf,
    log: File,
    proposals: Vec<Proposal>,
    index: HashMap<String, usize>,
    seq: u64,
    snapshot_every: usize,
    since_snapshot: usize,
}

impl ReviewStore {
    /// Opens (or creates) the store in `dir`. `snapshot_every` = 0 turns
    /// automatic snapshots off.
    pub fn open(dir: &Path, snapshot_every: usize) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut store = ReviewStore {
            dir: dir.to_path_buf(),
            log: OpenOptions::new().create(true).append(true).open(dir.join(EVENTS))?,
            proposals: Vec::new(),
            index: HashMap::new(),
            seq: 0,
            snapshot_every,
            since_snapshot: 0,
        };
        let snapshot_path = dir.join(SNAPSHOT);
        if snapshot_path.exists() {
            let snapshot: Snapshot = serde_json::from_str(&std::fs::read_to_string(&snapshot_path)?)
                .map_err(|e| store.corrupt(SNAPSHOT, e.to_string()))?;
            store.seq = snapshot.seq;
            for p in snapshot.proposals {
                store.insert(p);
            }
        }
        for event in store.read_log()? {
            if event.seq <= store.seq {
                continue;
            }
            if event.seq != store.seq + 1 {
                return Err(store.corrupt(EVENTS, format!("event {} follows {}", event.seq, store.seq)));
            }
            store.apply(&event)?;
            store.seq = event.seq;
            store.since_snapshot += 1;
        }
        Ok(store)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Sequence number of the last committed event.
    pub fn seq(&self) -> u64 {
        self.seq
    }

    fn corrupt(&self, file: &str, reason: String) -> CliError {
        CliError::Store { path: self.dir.join(file).display().to_string(), reason }
    }

    fn read_log(&self) -> Result<Vec<LoggedEvent>> {
        let path = self.dir.join(EVENTS);
        let mut text = std::fs::read_to_string(&path)?;
        if !text.is_empty() && !text.ends_with('\n') {
            let keep = text.rfind('\n').map_or(0, |i| i + 1);
            log::warn!("{}: dropping torn final line ({} bytes)", path.display(), text.len() - keep);
            text.truncate(keep);
            let file = OpenOptions::new().write(true).open(&path)?;
            file.set_len(keep as u64)?;
            file.sync_all()?;
        }
        let mut events = Vec::new();
        for (i, line) in BufReader::new(text.as_bytes()).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let event = serde_json::from_str(&line).map_err(|e| self.corrupt(EVENTS, format!("line {}: {e}", i + 1)))?;
            events.push(event);
        }
        Ok(events)
    }

    fn insert(&mut self, proposal: Proposal) {
        self.index.insert(proposal.proposal_id.clone(), self.proposals.len());
        self.proposals.push(proposal);
    }

    fn apply(&mut self, logged: &LoggedEvent) -> Result<()> {
        match &logged.event {
            Event::Created { proposal } => {
                if self.index.contains_key(&proposal.proposal_id) {
                    return Err(self.corrupt(EVENTS, format!("event {}: {} created twice", logged.seq, proposal.proposal_id)));
                }
                self.insert((**proposal).clone());
            }
            Event::Decided { proposal_id, decision, note } => {
                let i = *self.index.get(proposal_id).ok_or_else(|| CliError::NotFound(proposal_id.clone()))?;
                self.proposals[i].decide(decision, note.clone(), logged.at_ms)?;
            }
        }
        Ok(())
    }

    fn append(&mut self, event: Event, at_ms: u64) -> Result<()> {
        let logged = LoggedEvent { seq: self.seq + 1, at_ms, event };
        let mut line = serde_json::to_vec(&logged)?;
        line.push(b'\n');
        self.log.write_all(&line)?;
        self.log.sync_data()?;
        self.apply(&logged)?;
        self.seq = logged.seq;
        self.since_snapshot += 1;
        if self.snapshot_every > 0 && self.since_snapshot >= self.snapshot_every {
            self.snapshot()?;
        }
        Ok(())
    }

    /// Adds proposals whose ids are not in the store yet; returns how many
    /// were added.
    pub fn add(&mut self, proposals: impl IntoIterator<Item = Proposal>) -> Result<usize> {
        let mut added = 0;
        for p in proposals {
            if self.index.contains_key(&p.proposal_id) {
                continue;
            }
            let at = p.created_ms;
            self.append(Event::Created { proposal: Box::new(p) }, at)?;
            added += 1;
        }
        Ok(added)
    }

    /// Validates the decision against the current state, logs it, then
    /// applies it.
    pub fn decide(&mut self, id: &str, decision: Decision, note: Option<String>, at_ms: u64) -> Result<&Proposal> {
        let i = *self.index.get(id).ok_or_else(|| CliError::NotFound(id.to_string()))?;
        self.proposals[i].clone().decide(&decision, note.clone(), at_ms)?;
        self.append(Event::Decided { proposal_id: id.to_string(), decision, note }, at_ms)?;
        Ok(&self.proposals[i])
    }

    pub fn get(&self, id: &str) -> Option<&Proposal> {
        self.index.get(id).map(|&i| &self.proposals[i])
    }

    /// Proposals in insertion order.
    pub fn proposals(&self) -> &[Proposal] {
        &self.proposals
    }

    /// One page of proposals, optionally filtered by status, plus the number
    /// matching the filter.
    pub fn list(&self, status: Option<ProposalStatus>, offset: usize, limit: usize) -> (usize, Vec<&Proposal>) {
        let matching = self.proposals.iter().filter(|p| status.is_none_or(|s| p.status == s));
        let total = matching.clone().count();
        (total, matching.skip(offset).take(limit).collect())
    }

    pub fn stats(&self) -> Stats {
        let count = |s| self.proposals.iter().filter(|p| p.status == s).count();
        Stats {
            total: self.proposals.len(),
            pending: count(ProposalStatus::Pending),
            accepted: count(ProposalStatus::Accepted),
            rejected: count(ProposalStatus::Rejected),
            edited: count(ProposalStatus::Edited),
            failed: count(ProposalStatus::Failed),
        }
    }

    /// Writes the current state and the last event number it covers.
    pub fn snapshot(&mut self) -> Result<()> {
        let path = self.dir.join(SNAPSHOT);
        let tmp = self.dir.join(format!("{SNAPSHOT}.tmp"));
        let mut file = File::create(&tmp)?;
        serde_json::to_writer(&mut file, &json!({"seq": self.seq, "proposals": self.proposals}))?;
        file.sync_all()?;
        std::fs::rename(&tmp, &path)?;
        if let Ok(dir) = File::open(&self.dir) {
            let _ = dir.sync_all();
        }
        self.since_snapshot = 0;
        Ok(())
    }

    /// Accepted and edited proposals as corpus records, in store order.
    pub fn records(&self) -> Result<Vec<SampleRecord>> {
        let mut out = Vec::new();
        for p in &self.proposals {
            if let Some(r) = p.to_sample_record() {
                r.validate()?;
                out.push(r);
            }
        }
        Ok(out)
    }

    /// Writes the corpus file and its manifest, with review counts in the
    /// manifest. Repeating it on an unchanged store rewrites identical files.
    pub fn finalize(&self, path: &Path) -> Result<FinalizeSummary> {
        let records = self.records()?;
        save_records(path, &records)?;
        let stats = self.stats();
        let mut manifest = Manifest::for_records(&CorpusConfig::default(), &records);
        manifest.review = Some(json!({"stats": stats, "events": self.seq}));
        manifest.save(&Manifest::sidecar_path(path))?;
        Ok(FinalizeSummary { path: path.display().to_string(), records: records.len(), stats })
    }
}

