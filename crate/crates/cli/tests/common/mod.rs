#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Stdio};

use logicclip_core::corpus::{build_corpus, CorpusConfig};
use logicclip_core::ExecMode;
use logicclip_forge::{Forge, Proposal, ProposalStatus, RetryPolicy};

pub const BIN: &str = env!("CARGO_BIN_EXE_logicclip");

/// `n` rule-based proposals over a small synthetic corpus with every scenario.
pub fn proposals(n: usize) -> Vec<Proposal> {
    let config = CorpusConfig { scenes: n, seed: 11, scenario_weights: [1.0; 4], ..CorpusConfig::default() };
    let records = build_corpus(&config, ExecMode::Sequential).unwrap().records;
    let forge = Forge::new(RetryPolicy::default(), 3);
    let out = forge.generate_all(&records, 2);
    assert!(out.iter().all(|p| p.status == ProposalStatus::Pending));
    out
}

pub struct Server {
    pub child: Child,
    pub base: String,
}

impl Server {
    pub fn start(store: &Path, out: &Path, proposals: Option<&Path>, envs: &[(&str, &str)], config: Option<&Path>) -> Server {
        let mut cmd = Command::new(BIN);
        cmd.args(["serve", "--port", "0", "--store"]).arg(store).arg("--out").arg(out);
        if let Some(p) = proposals {
            cmd.arg("--proposals").arg(p);
        }
        if let Some(c) = config {
            cmd.arg("--config").arg(c);
        }
        for (k, v) in envs {
            cmd.env(k, v);
        }
        let mut child = cmd.stdout(Stdio::null()).stderr(Stdio::piped()).spawn().unwrap();
        let mut stderr = BufReader::new(child.stderr.take().unwrap());
        let mut line = String::new();
        stderr.read_line(&mut line).unwrap();
        std::thread::spawn(move || std::io::copy(&mut stderr, &mut std::io::sink()));
        let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap_or_else(|_| panic!("unexpected: {line}"));
        let base = format!("http://{}", v["listening"].as_str().unwrap());
        Server { child, base }
    }

    /// SIGKILL, no shutdown path runs.
    pub fn crash(mut self) {
        self.child.kill().unwrap();
        self.child.wait().unwrap();
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
