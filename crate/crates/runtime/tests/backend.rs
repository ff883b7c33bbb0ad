mod common;

use std::net::SocketAddr;
use std::time::Duration;

use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use dpt_core::system2::{Prompt, Reply};
use dpt_runtime::backend::{
    Backend, BackendError, BackendSpec, FixtureEntry, HttpBackend, HttpConfig, NullBackend, ScriptedBackend,
};

fn prompt(system: &str, user: &str) -> Prompt {
    Prompt { system: system.into(), user: user.into() }
}

#[test]
fn null_backend_replies_with_nothing() {
    let c = NullBackend.complete(&prompt("s", "u"));
    assert_eq!(c.reply, Reply::Text(String::new()));
    assert!(NullBackend.deterministic());
}

#[test]
fn scripted_entries_are_used_once_by_the_first_matching_prompt() {
    let b = ScriptedBackend::new(vec![
        common::entry("alpha", "first alpha".into(), 1.0),
        common::entry("beta", "only beta".into(), 2.0),
        common::entry("alpha", "second alpha".into(), 3.0),
        FixtureEntry { match_hint: None, response: "anything".into(), latency_s: 0.5 },
    ]);
    assert_eq!(b.remaining(), 4);
    let c = b.complete(&prompt("", "needs beta"));
    assert_eq!((c.reply, c.latency_s), (Reply::Text("only beta".into()), 2.0));
    // The hint may also sit in the system prompt.
    let c = b.complete(&prompt("alpha here", "x"));
    assert_eq!(c.reply, Reply::Text("first alpha".into()));
    assert_eq!(b.complete(&prompt("", "alpha")).reply, Reply::Text("second alpha".into()));
    // Only the catch-all is left.
    assert_eq!(b.complete(&prompt("", "beta")).reply, Reply::Text("anything".into()));
    assert_eq!(b.remaining(), 0);
    assert!(matches!(b.complete(&prompt("", "alpha")).reply, Reply::Failed(_)));
}

#[test]
fn scripted_wall_delay_lands_before_the_modeled_latency() {
    let b = ScriptedBackend::new(vec![]);
    assert_eq!(b.wall_delay(1.0), Duration::from_millis(950));
    assert_eq!(b.wall_delay(0.01), Duration::ZERO);
    assert_eq!(NullBackend.wall_delay(5.0), Duration::ZERO);
}

#[test]
fn fixture_files_round_trip() {
    let entries = common::dpt_fixture(2, 1.5);
    let (_dir, path) = common::write_fixture(&entries);
    let b = ScriptedBackend::load(&path).unwrap();
    assert_eq!(b.remaining(), 6);
    let c = b.complete(&prompt("", common::REFLECT_HINT));
    assert_eq!(c.reply, Reply::Text(entries[1].response.clone()));
    assert_eq!(c.latency_s, 1.5);
}

#[test]
fn bad_fixture_lines_are_reported_with_their_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.jsonl");
    std::fs::write(&path, "{\"response\": \"ok\"}\n\n{\"response\": \"x\", \"surprise\": 1}\n").unwrap();
    match ScriptedBackend::load(&path) {
        Err(BackendError::Fixture { line, .. }) => assert_eq!(line, 3),
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(ScriptedBackend::load(&dir.path().join("missing.jsonl")), Err(BackendError::Io { .. })));
}

#[test]
fn backend_specs_parse_and_print() {
    for (text, spec) in [
        ("null", BackendSpec::Null),
        ("http", BackendSpec::Http),
        ("scripted:fx/a.jsonl", BackendSpec::Scripted("fx/a.jsonl".into())),
    ] {
        assert_eq!(BackendSpec::parse(text).unwrap(), spec);
        assert_eq!(String::from(spec), text);
    }
    for bad in ["", "scripted:", "gpt"] {
        assert!(matches!(BackendSpec::parse(bad), Err(BackendError::Unknown(_))));
    }
}

#[test]
fn http_backend_needs_its_key() {
    let cfg = HttpConfig { api_key_env: Some("DPT_TEST_SURELY_UNSET_KEY".into()), ..HttpConfig::default() };
    assert!(matches!(HttpBackend::new(cfg), Err(BackendError::MissingKey(_))));
}

/// Serves a chat-completions mock on a background runtime.
fn mock_server(delay: Duration) -> SocketAddr {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let app = Router::new().route(
                "/v1/chat/completions",
                post(move |headers: HeaderMap, Json(body): Json<serde_json::Value>| async move {
                    tokio::time::sleep(delay).await;
                    if headers.get("authorization").and_then(|v| v.to_str().ok()) != Some("Bearer sekrit") {
                        return (StatusCode::UNAUTHORIZED, Json(serde_json::json!({})));
                    }
                    let echo = format!(
                        "{} | {} | {}",
                        body["model"].as_str().unwrap_or_default(),
                        body["messages"][0]["content"].as_str().unwrap_or_default(),
                        body["messages"][1]["content"].as_str().unwrap_or_default()
                    );
                    (StatusCode::OK, Json(serde_json::json!({"choices": [{"message": {"content": echo}}]})))
                }),
            );
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    rx.recv().unwrap()
}

fn http_config(addr: SocketAddr, key_var: &str, timeout_s: f64) -> HttpConfig {
    HttpConfig {
        base_url: format!("http://{addr}/v1/"),
        model: "mock-model".into(),
        api_key_env: Some(key_var.into()),
        temperature: 0.0,
        timeout_s,
    }
}

#[test]
fn http_backend_talks_to_a_chat_endpoint() {
    std::env::set_var("DPT_TEST_KEY_OK", "sekrit");
    std::env::set_var("DPT_TEST_KEY_BAD", "wrong");
    let addr = mock_server(Duration::ZERO);
    let b = HttpBackend::new(http_config(addr, "DPT_TEST_KEY_OK", 5.0)).unwrap();
    assert!(!b.deterministic());
    let c = b.complete(&prompt("sys", "usr"));
    assert_eq!(c.reply, Reply::Text("mock-model | sys | usr".into()));
    assert!(c.latency_s > 0.0);

    let b = HttpBackend::new(http_config(addr, "DPT_TEST_KEY_BAD", 5.0)).unwrap();
    assert!(matches!(b.complete(&prompt("s", "u")).reply, Reply::Failed(_)));
}

#[test]
fn slow_http_replies_time_out() {
    std::env::set_var("DPT_TEST_KEY_SLOW", "sekrit");
    let addr = mock_server(Duration::from_secs(2));
    let b = HttpBackend::new(http_config(addr, "DPT_TEST_KEY_SLOW", 0.3)).unwrap();
    let c = b.complete(&prompt("s", "u"));
    assert_eq!(c.reply, Reply::Timeout);
    assert!(c.latency_s < 1.5, "latency {}", c.latency_s);
}
