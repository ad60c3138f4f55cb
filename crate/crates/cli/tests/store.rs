mod common;

use std::fs;
use std::path::Path;

use proptest::prelude::*;

use logicclip::{CliError, ReviewStore};
use logicclip_core::corpus::{load_records, Manifest};
use logicclip_forge::{Decision, ForgeError, Proposal, ProposalStatus};

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        fs::copy(entry.path(), to.join(entry.file_name())).unwrap();
    }
}

fn decision(kind: u8, p: &Proposal, salt: usize) -> Decision {
    match kind % 3 {
        0 => Decision::Accept,
        1 => Decision::Reject,
        _ => Decision::Edit { texts: (0..p.candidates.len()).map(|i| format!("edited {salt} {i}")).collect() },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Copying the store directory after any event and reopening it, with or
    /// without half of the next event written, gives back that state.
    #[test]
    fn every_crash_point_recovers(
        ops in prop::collection::vec((0usize..6, 0u8..3), 1..14),
        snapshot_every in 0usize..4,
    ) {
        let proposals = common::proposals(6);
        let tmp = tempfile::tempdir().unwrap();
        let live = tmp.path().join("live");
        let mut store = ReviewStore::open(&live, snapshot_every).unwrap();
        store.add(proposals.clone()).unwrap();
        let mut cuts = vec![(store.seq(), store.proposals().to_vec())];
        copy_dir(&live, &tmp.path().join("cut0"));
        for (n, (i, kind)) in ops.iter().enumerate() {
            let id = proposals[*i].proposal_id.clone();
            let d = decision(*kind, &proposals[*i], n);
            let before = store.seq();
            match store.decide(&id, d, Some(format!("op {n}")), 1_000 + n as u64) {
                Ok(_) => {}
                Err(CliError::Forge(ForgeError::Conflict { .. })) => {
                    prop_assert_eq!(store.seq(), before);
                    continue;
                }
                Err(e) => panic!("{e}"),
            }
            copy_dir(&live, &tmp.path().join(format!("cut{}", cuts.len())));
            cuts.push((store.seq(), store.proposals().to_vec()));
        }
        let full_log = fs::read_to_string(live.join("events.jsonl")).unwrap();
        let lines: Vec<&str> = full_log.lines().collect();

        for (k, (seq, expected)) in cuts.iter().enumerate() {
            let dir = tmp.path().join(format!("cut{k}"));
            let reopened = ReviewStore::open(&dir, snapshot_every).unwrap();
            prop_assert_eq!(reopened.seq(), *seq);
            prop_assert_eq!(reopened.proposals(), expected.as_slice());
            drop(reopened);

            if let Some(next) = lines.get(*seq as usize) {
                let mut torn = fs::read_to_string(dir.join("events.jsonl")).unwrap();
                torn.push_str(&next[..next.len() / 2]);
                fs::write(dir.join("events.jsonl"), torn).unwrap();
                let mut reopened = ReviewStore::open(&dir, snapshot_every).unwrap();
                prop_assert_eq!(reopened.proposals(), expected.as_slice());
                // the torn bytes are gone, so new events land on a clean line
                if let Some(p) = reopened.proposals().iter().find(|p| p.status == ProposalStatus::Pending).cloned() {
                    reopened.decide(&p.proposal_id, Decision::Reject, None, 5).unwrap();
                    let again = ReviewStore::open(&dir, snapshot_every).unwrap();
                    prop_assert_eq!(again.get(&p.proposal_id).unwrap().status, ProposalStatus::Rejected);
                }
            }
        }
    }
}

#[test]
fn snapshot_and_log_replay_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let mut store = ReviewStore::open(tmp.path(), 3).unwrap();
    let proposals = common::proposals(8);
    store.add(proposals.clone()).unwrap();
    for (n, p) in proposals.iter().enumerate().take(7) {
        store.decide(&p.proposal_id, decision(n as u8, p, n), None, n as u64).unwrap();
    }
    let state = store.proposals().to_vec();
    drop(store);
    assert!(tmp.path().join("snapshot.json").exists());
    assert_eq!(ReviewStore::open(tmp.path(), 3).unwrap().proposals(), state.as_slice());
    fs::remove_file(tmp.path().join("snapshot.json")).unwrap();
    assert_eq!(ReviewStore::open(tmp.path(), 0).unwrap().proposals(), state.as_slice());
}

#[test]
fn corruption_before_the_last_line_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut store = ReviewStore::open(tmp.path(), 0).unwrap();
    store.add(common::proposals(3)).unwrap();
    drop(store);
    let path = tmp.path().join("events.jsonl");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[1] = "{not json".into();
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    assert!(matches!(ReviewStore::open(tmp.path(), 0), Err(CliError::Store { .. })));
}

#[test]
fn decisions_validate_before_logging() {
    let tmp = tempfile::tempdir().unwrap();
    let mut store = ReviewStore::open(tmp.path(), 0).unwrap();
    let proposals = common::proposals(2);
    store.add(proposals.clone()).unwrap();
    let id = &proposals[0].proposal_id;
    assert_eq!(store.add(proposals.clone()).unwrap(), 0);
    assert!(matches!(store.decide("nope", Decision::Accept, None, 0), Err(CliError::NotFound(_))));
    let short = Decision::Edit { texts: vec!["one".into()] };
    assert!(matches!(store.decide(id, short, None, 0), Err(CliError::Forge(ForgeError::Decision(_)))));
    assert_eq!(store.seq(), 2);
    store.decide(id, Decision::Accept, Some("fine".into()), 9).unwrap();
    assert!(matches!(store.decide(id, Decision::Reject, None, 0), Err(CliError::Forge(ForgeError::Conflict { .. }))));
    assert_eq!(store.seq(), 3);
    let p = store.get(id).unwrap();
    assert_eq!((p.status, p.note.as_deref(), p.updated_ms), (ProposalStatus::Accepted, Some("fine"), 9));
}

#[test]
fn finalize_keeps_accepted_and_edited_only() {
    let tmp = tempfile::tempdir().unwrap();
    let mut store = ReviewStore::open(&tmp.path().join("store"), 0).unwrap();
    let proposals = common::proposals(4);
    store.add(proposals.clone()).unwrap();
    let out = tmp.path().join("final.jsonl");

    let empty = store.finalize(&out).unwrap();
    assert_eq!(empty.records, 0);
    assert!(load_records(&out).unwrap().is_empty());

    store.decide(&proposals[0].proposal_id, Decision::Accept, None, 1).unwrap();
    store.decide(&proposals[1].proposal_id, Decision::Reject, None, 2).unwrap();
    let texts: Vec<String> = (0..proposals[2].candidates.len()).map(|i| format!("a revised caption {i}")).collect();
    store.decide(&proposals[2].proposal_id, Decision::Edit { texts: texts.clone() }, None, 3).unwrap();

    let summary = store.finalize(&out).unwrap();
    assert_eq!(summary.records, 2);
    assert_eq!((summary.stats.accepted, summary.stats.rejected, summary.stats.edited, summary.stats.pending), (1, 1, 1, 1));
    let records = load_records(&out).unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0].sample_id, proposals[0].sample_id);
    assert_eq!(records[0].negatives, proposals[0].candidates);
    assert_eq!(records[1].negatives, texts);
    assert_eq!(records[1].positive, proposals[2].positive());

    let manifest = Manifest::load(&Manifest::sidecar_path(&out)).unwrap();
    assert_eq!(manifest.records, 2);
    assert_eq!(manifest.review.as_ref().unwrap()["stats"]["rejected"], 1);

    let corpus = fs::read(&out).unwrap();
    let sidecar = fs::read(Manifest::sidecar_path(&out)).unwrap();
    store.finalize(&out).unwrap();
    assert_eq!(fs::read(&out).unwrap(), corpus);
    assert_eq!(fs::read(Manifest::sidecar_path(&out)).unwrap(), sidecar);
}

#[test]
fn paging_and_status_filter() {
    let tmp = tempfile::tempdir().unwrap();
    let mut store = ReviewStore::open(tmp.path(), 0).unwrap();
    let proposals = common::proposals(7);
    store.add(proposals.clone()).unwrap();
    store.decide(&proposals[3].proposal_id, Decision::Accept, None, 0).unwrap();
    let (total, page) = store.list(Some(ProposalStatus::Pending), 2, 3);
    assert_eq!(total, 6);
    let ids: Vec<&str> = page.iter().map(|p| p.proposal_id.as_str()).collect();
    let expected: Vec<&str> = [2, 4, 5].iter().map(|&i| proposals[i].proposal_id.as_str()).collect();
    assert_eq!(ids, expected);
    assert_eq!(store.list(None, 6, 10).1.len(), 1);
    assert_eq!(store.stats().total, 7);
}
