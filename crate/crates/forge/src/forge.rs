//! Proposal generation: round-robin over backends, retry, rule-based fallback.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use logicclip_core::corpus::{fact_hash, SampleRecord, Scenario};
use logicclip_core::{detect_categories, LogicalCategory};

use crate::backend::ChatBackend;
use crate::error::{ForgeError, Result};
use crate::parse::parse_llm_response;
use crate::proposal::{now_ms, Proposal, ProposalStatus, RULE_BASED};
use crate::rules::perturb_n;
use crate::template::{build_prompt, PromptTemplate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Backend calls per proposal before falling back.
    pub max_attempts: u32,
    /// Delay before the second attempt; doubles after each failure.
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 3, base_delay: Duration::from_secs(1) }
    }
}

impl RetryPolicy {
    pub fn delay_before(&self, attempt: u32) -> Duration {
        if attempt == 0 {
            Duration::ZERO
        } else {
            self.base_delay.saturating_mul(1 << (attempt - 1).min(16))
        }
    }
}

/// Counting semaphore bounding outstanding requests to one backend.
struct Gate {
    limit: usize,
    busy: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(limit: usize) -> Self {
        Gate { limit: limit.max(1), busy: Mutex::new(0), freed: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut busy = self.busy.lock().unwrap_or_else(|e| e.into_inner());
        while *busy >= self.limit {
            busy = self.freed.wait(busy).unwrap_or_else(|e| e.into_inner());
        }
        *busy += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.busy.lock().unwrap_or_else(|e| e.into_inner()) -= 1;
        self.0.freed.notify_one();
    }
}

struct Slot {
    backend: Arc<dyn ChatBackend>,
    gate: Gate,
}

pub struct Forge {
    slots: Vec<Slot>,
    policy: RetryPolicy,
    seed: u64,
    cursor: AtomicUsize,
}

impl Forge {
    /// A forge with no backends produces rule-based proposals only.
    pub fn new(policy: RetryPolicy, seed: u64) -> Self {
        Forge { slots: Vec::new(), policy, seed, cursor: AtomicUsize::new(0) }
    }

    pub fn with_backend(mut self, backend: Arc<dyn ChatBackend>, max_in_flight: usize) -> Self {
        self.slots.push(Slot { backend, gate: Gate::new(max_in_flight) });
        self
    }

    pub fn backend_names(&self) -> Vec<&str> {
        self.slots.iter().map(|s| s.backend.name()).collect()
    }

    /// Never fails: problems end up in the proposal's diagnostics, and a
    /// proposal nothing could fill is marked failed.
    pub fn generate(&self, record: &SampleRecord) -> Proposal {
        let now = now_ms();
        let mut categories = record.categories;
        if categories.is_empty() {
            categories = detect_categories(&record.positive);
        }
        let logic_type = categories.iter().next();
        let mut proposal = Proposal {
            proposal_id: format!("p-{}", record.sample_id),
            sample_id: record.sample_id.clone(),
            source_caption: record.positive.clone(),
            scenario: record.scenario,
            logic_type: logic_type.unwrap_or(LogicalCategory::Conjunction),
            categories,
            image_ref: record.image_ref.clone(),
            candidates: Vec::new(),
            correct_option: None,
            backend: String::new(),
            status: ProposalStatus::Failed,
            note: None,
            edited: None,
            created_ms: now,
            updated_ms: now,
            request: None,
            diagnostics: Vec::new(),
        };
        let Some(logic_type) = logic_type else {
            proposal.diagnostics.push("caption has no detectable logical category".into());
            return proposal;
        };

        if !self.slots.is_empty() {
            let start = self.cursor.fetch_add(1, Ordering::Relaxed);
            for attempt in 0..self.policy.max_attempts {
                std::thread::sleep(self.policy.delay_before(attempt));
                let slot = &self.slots[(start + attempt as usize) % self.slots.len()];
                match self.ask(slot, record, logic_type, &mut proposal) {
                    Ok(()) => {
                        proposal.backend = slot.backend.name().to_string();
                        proposal.status = ProposalStatus::Pending;
                        return proposal;
                    }
                    Err(e) => {
                        log::warn!("{}: attempt {} on {}: {e}", record.sample_id, attempt + 1, slot.backend.name());
                        proposal.diagnostics.push(format!("attempt {} ({}): {e}", attempt + 1, slot.backend.name()));
                    }
                }
            }
        }

        let needed = PromptTemplate::for_scenario(record.scenario).expected_count() - usize::from(record.scenario == Scenario::Medicine);
        let seed = self.seed ^ fact_hash(&record.sample_id);
        for category in categories.iter() {
            match perturb_n(&record.positive, category, seed, needed) {
                Ok(negatives) => {
                    proposal.logic_type = category;
                    proposal.candidates = negatives;
                    if record.scenario == Scenario::Medicine {
                        proposal.correct_option = Some(record.positive.clone());
                    }
                    proposal.backend = if self.slots.is_empty() {
                        RULE_BASED.to_string()
                    } else {
                        format!("{RULE_BASED} (fallback)")
                    };
                    proposal.status = ProposalStatus::Pending;
                    return proposal;
                }
                Err(e) => proposal.diagnostics.push(format!("{RULE_BASED}: {e}")),
            }
        }
        log::warn!("{}: no proposal: {}", record.sample_id, proposal.diagnostics.join("; "));
        proposal
    }

    fn ask(&self, slot: &Slot, record: &SampleRecord, logic_type: LogicalCategory, proposal: &mut Proposal) -> Result<()> {
        let prompt = build_prompt(record.scenario, &record.positive, logic_type, Some(&record.sample_id))?;
        proposal.request = Some(slot.backend.request(&prompt));
        let text = {
            let _permit = slot.gate.acquire();
            slot.backend.complete(&prompt)?
        };
        let expected = PromptTemplate::for_scenario(record.scenario).expected_count();
        let mut captions = parse_llm_response(&text, expected)?.captions;
        let correct = (record.scenario == Scenario::Medicine).then(|| captions.remove(0));
        check_candidates(&captions, &record.positive, correct.as_deref())?;
        proposal.candidates = captions;
        proposal.correct_option = correct;
        Ok(())
    }

    /// Runs `generate` over `records` on `workers` threads; output order
    /// follows input order.
    pub fn generate_all(&self, records: &[SampleRecord], workers: usize) -> Vec<Proposal> {
        let next = AtomicUsize::new(0);
        let out: Mutex<Vec<Option<Proposal>>> = Mutex::new(vec![None; records.len()]);
        std::thread::scope(|scope| {
            for _ in 0..workers.clamp(1, records.len().max(1)) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(record) = records.get(i) else { break };
                    let p = self.generate(record);
                    out.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(p);
                });
            }
        });
        out.into_inner().unwrap_or_else(|e| e.into_inner()).into_iter().map(|p| p.expect("every index visited")).collect()
    }
}

fn check_candidates(candidates: &[String], source: &str, correct: Option<&str>) -> Result<()> {
    for (i, c) in candidates.iter().enumerate() {
        if c == source || Some(c.as_str()) == correct {
            return Err(ForgeError::Invalid(format!("candidate {} repeats the correct caption", i + 1)));
        }
        if candidates[..i].contains(c) {
            return Err(ForgeError::Invalid(format!("candidate {} is a duplicate", i + 1)));
        }
    }
    Ok(())
}
