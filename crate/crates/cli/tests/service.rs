mod common;

use std::fs::File;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

use common::Server;
use logicclip_core::corpus::{load_records, Manifest};
use logicclip_forge::proposal::write_proposals;

fn get(client: &Client, url: String) -> (StatusCode, Value) {
    let r = client.get(url).send().unwrap();
    (r.status(), r.json().unwrap())
}

fn post(client: &Client, url: String, body: Value) -> (StatusCode, Value) {
    let r = client.post(url).json(&body).send().unwrap();
    (r.status(), r.json().unwrap())
}

#[test]
fn review_round_trip_survives_a_crash() {
    let tmp = tempfile::tempdir().unwrap();
    let store = tmp.path().join("store");
    let out = tmp.path().join("reviewed.jsonl");
    let input = tmp.path().join("proposals.jsonl");
    let proposals = common::proposals(20);
    write_proposals(File::create(&input).unwrap(), &proposals).unwrap();
    let client = Client::new();

    let server = Server::start(&store, &out, Some(&input), &[], None);
    let (status, page) = get(&client, format!("{}/proposals?status=pending&limit=8", server.base));
    assert_eq!(status, StatusCode::OK);
    assert_eq!(page["total"], 20);
    assert_eq!(page["proposals"].as_array().unwrap().len(), 8);
    let first = &page["proposals"][0];
    assert_eq!(first["proposal_id"], proposals[0].proposal_id.as_str());
    assert_eq!(first["candidates"], json!(proposals[0].candidates));

    // accept 0..10, reject 10..15, edit 15..20
    let body = |i: usize| -> Value {
        match i {
            0..10 => json!({"action": "accept"}),
            10..15 => json!({"action": "reject", "note": "weak negatives"}),
            _ => {
                let texts: Vec<String> =
                    (0..proposals[i].candidates.len()).map(|k| format!("a reviewer wrote negative {k} for item {i}")).collect();
                json!({"action": "edit", "texts": texts})
            }
        }
    };
    let decide = |base: &str, i: usize| post(&client, format!("{base}/proposals/{}/decision", proposals[i].proposal_id), body(i));

    for i in [0, 1, 2, 3, 4, 10, 11, 15, 16] {
        let (status, p) = decide(&server.base, i);
        assert_eq!(status, StatusCode::OK, "{p}");
    }
    server.crash();

    // restart without reloading proposals; every committed decision is there
    let server = Server::start(&store, &out, None, &[], None);
    let (_, stats) = get(&client, format!("{}/stats", server.base));
    assert_eq!(stats, json!({"total": 20, "pending": 11, "accepted": 5, "rejected": 2, "edited": 2, "failed": 0}));
    let (status, p) = get(&client, format!("{}/proposals/{}", server.base, proposals[15].proposal_id));
    assert_eq!(status, StatusCode::OK);
    assert_eq!(p["status"], "edited");
    let (status, _) = decide(&server.base, 0);
    assert_eq!(status, StatusCode::CONFLICT);

    for i in (5..10).chain(12..15).chain(17..20) {
        let (status, p) = decide(&server.base, i);
        assert_eq!(status, StatusCode::OK, "{p}");
    }
    let (status, summary) = post(&client, format!("{}/datasets/finalize", server.base), json!({}));
    assert_eq!(status, StatusCode::OK);
    assert_eq!(summary["records"], 15);
    server.crash();

    let records = load_records(&out).unwrap();
    assert_eq!(records.len(), 15);
    for (i, p) in proposals.iter().enumerate().skip(15) {
        let r = records.iter().find(|r| r.sample_id == p.sample_id).unwrap();
        assert!(r.negatives.iter().all(|n| n.starts_with("a reviewer wrote negative")));
        assert!(r.negatives[0].ends_with(&format!("item {i}")));
    }
    for p in &proposals[10..15] {
        assert!(records.iter().all(|r| r.sample_id != p.sample_id));
    }
    let manifest = Manifest::load(&Manifest::sidecar_path(&out)).unwrap();
    assert_eq!(manifest.review.unwrap()["stats"]["edited"], 5);

    // the same decisions survive one more restart after finalize
    let server = Server::start(&store, &out, Some(&input), &[], None);
    let (_, stats) = get(&client, format!("{}/stats", server.base));
    assert_eq!(stats["pending"], 0);
}

#[test]
fn errors_are_json_with_status_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("proposals.jsonl");
    let proposals = common::proposals(2);
    write_proposals(File::create(&input).unwrap(), &proposals).unwrap();
    let server = Server::start(&tmp.path().join("s"), &tmp.path().join("o.jsonl"), Some(&input), &[], None);
    let client = Client::new();
    let id = &proposals[0].proposal_id;

    let (status, e) = get(&client, format!("{}/proposals/p-missing", server.base));
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(e["error"].as_str().unwrap().contains("p-missing"));
    let (status, _) = post(&client, format!("{}/proposals/p-missing/decision", server.base), json!({"action": "accept"}));
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = post(&client, format!("{}/proposals/{id}/decision", server.base), json!({"action": "maybe"}));
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, e) = post(&client, format!("{}/proposals/{id}/decision", server.base), json!({"action": "edit", "texts": ["x"]}));
    assert_eq!(status, StatusCode::BAD_REQUEST, "{e}");
    let (status, _) = get(&client, format!("{}/proposals?status=bogus", server.base));
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = get(&client, format!("{}/proposals?limit=ten", server.base));
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, p) = post(&client, format!("{}/proposals/{id}/decision", server.base), json!({"action": "accept", "note": "ok"}));
    assert_eq!(status, StatusCode::OK);
    assert_eq!((p["status"].as_str(), p["note"].as_str()), (Some("accepted"), Some("ok")));
    let (status, e) = post(&client, format!("{}/proposals/{id}/decision", server.base), json!({"action": "reject"}));
    assert_eq!(status, StatusCode::CONFLICT);
    assert!(e["error"].is_string());
}

#[test]
fn shared_token_is_enforced_when_configured() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.toml");
    std::fs::write(&config, "[serve]\ntoken_env = \"REVIEW_TOKEN_FOR_TEST\"\n").unwrap();
    let server = Server::start(
        &tmp.path().join("s"),
        &tmp.path().join("o.jsonl"),
        None,
        &[("REVIEW_TOKEN_FOR_TEST", "s3cret")],
        Some(&config),
    );
    let client = Client::new();
    let url = format!("{}/stats", server.base);
    assert_eq!(client.get(&url).send().unwrap().status(), StatusCode::UNAUTHORIZED);
    assert_eq!(client.get(&url).header("x-review-token", "wrong").send().unwrap().status(), StatusCode::UNAUTHORIZED);
    assert_eq!(client.get(&url).header("x-review-token", "s3cret").send().unwrap().status(), StatusCode::OK);
}

#[test]
fn finalize_with_nothing_accepted_writes_an_empty_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o.jsonl");
    let server = Server::start(&tmp.path().join("s"), &out, None, &[], None);
    let (status, summary) = post(&Client::new(), format!("{}/datasets/finalize", server.base), json!({}));
    assert_eq!(status, StatusCode::OK);
    assert_eq!(summary["records"], 0);
    assert!(load_records(&out).unwrap().is_empty());
}
