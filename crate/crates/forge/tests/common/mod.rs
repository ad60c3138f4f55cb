//! A scripted chat-completion endpoint on a raw TCP socket.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde_json::{json, Value};

pub struct FakeServer {
    pub url: String,
    pub requests: Arc<AtomicUsize>,
    pub malformed: Arc<AtomicUsize>,
    pub headers: Arc<Mutex<Vec<String>>>,
}

/// What the endpoint does with request number `n`.
#[derive(Clone, Copy)]
pub enum Script {
    /// Requests with `n % 10` in {0, 3, 7} get a broken reply.
    ThirtyPercentMalformed,
    AlwaysMalformed,
    Healthy,
}

pub fn spawn(script: Script) -> FakeServer {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let requests = Arc::new(AtomicUsize::new(0));
    let malformed = Arc::new(AtomicUsize::new(0));
    let headers = Arc::new(Mutex::new(Vec::new()));
    let (r, m, h) = (requests.clone(), malformed.clone(), headers.clone());
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { continue };
            let (r, m, h) = (r.clone(), m.clone(), h.clone());
            std::thread::spawn(move || serve(stream, script, &r, &m, &h));
        }
    });
    FakeServer { url, requests, malformed, headers }
}

fn serve(stream: TcpStream, script: Script, requests: &AtomicUsize, malformed: &AtomicUsize, headers: &Mutex<Vec<String>>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut out = stream;
    loop {
        let mut length = 0usize;
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        loop {
            line.clear();
            if reader.read_line(&mut line).unwrap_or(0) == 0 {
                return;
            }
            let l = line.trim_end();
            if l.is_empty() {
                break;
            }
            headers.lock().unwrap().push(l.to_string());
            if let Some((k, v)) = l.split_once(':') {
                if k.eq_ignore_ascii_case("content-length") {
                    length = v.trim().parse().unwrap();
                }
            }
        }
        let mut body = vec![0; length];
        reader.read_exact(&mut body).unwrap();
        let request: Value = serde_json::from_slice(&body).unwrap();
        let prompt = request["messages"][0]["content"].as_str().unwrap().to_string();

        let n = requests.fetch_add(1, Ordering::SeqCst);
        let broken = match script {
            Script::ThirtyPercentMalformed => matches!(n % 10, 0 | 3 | 7),
            Script::AlwaysMalformed => true,
            Script::Healthy => false,
        };
        let (status, text) = if broken {
            malformed.fetch_add(1, Ordering::SeqCst);
            broken_reply(n, &prompt)
        } else {
            (200, chat_json(&good_list(&prompt)))
        };
        let reason = if status == 200 { "OK" } else { "Internal Server Error" };
        let reply = format!(
            "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{text}",
            text.len()
        );
        if out.write_all(reply.as_bytes()).is_err() {
            return;
        }
    }
}

fn chat_json(content: &str) -> String {
    json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]}).to_string()
}

/// The caption (or report) the prompt was built from.
pub fn source_of(prompt: &str) -> String {
    if let Some(rest) = prompt.strip_prefix("You are given a caption that describes a pathology report as follows: ") {
        return rest.split("\n\nPlease follow").next().unwrap().to_string();
    }
    let start = prompt.find("Caption: \"").unwrap() + "Caption: \"".len();
    let end = prompt[start..].find("\"\n\n").unwrap();
    prompt[start..start + end].to_string()
}

fn good_list(prompt: &str) -> String {
    let source = source_of(prompt);
    if prompt.contains("pathology report") {
        format!(
            "1. Because {source}, the impression is stable.\n2. {source} (flip one)\n3. {source} (flip two)\n4. {source} (flip three)\n5. {source} (flip four)"
        )
    } else {
        format!("Here you go:\n1. {source} (one)\n2. {source} (two)\n3. {source} (three)")
    }
}

fn broken_reply(n: usize, prompt: &str) -> (u16, String) {
    let source = source_of(prompt);
    match (n / 10) % 6 {
        0 => (200, chat_json("I'm sorry, I can't help with that.")),
        1 => (200, chat_json(&format!("1. {source} (one)\n3. {source} (three)"))),
        2 => (200, chat_json(&format!("1. {source} x\n1. {source} y\n2. {source} z"))),
        3 => (500, "upstream overloaded".to_string()),
        4 => (200, chat_json(&format!("1. {source}\n2. {source} b\n3. {source} c\n4. extra\n5. extra"))),
        _ => (200, "<html>not json at all</html>".to_string()),
    }
}
