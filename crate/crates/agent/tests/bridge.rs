//! Browser-facing bridge of the local agent.

mod common;

use std::time::Duration;

use common::*;
use futures::StreamExt;
use serde_json::json;
use sink_agent::local::{bridge, AgentOptions, EndpointSetup, LocalAgent, TcpConnector};
use sink_core::api::{DeliveryOutcome, DeliveryReport, DispatchSummary, EndpointStatus, LinkState};
use tokio::net::TcpListener;
use tokio::time::timeout;
use tokio_tungstenite::tungstenite::Message as WsMessage;
use tokio_util::sync::CancellationToken;

struct Rig {
    remote: sink_agent::remote::RemoteServer,
    agent: LocalAgent,
    base: String,
    cancel: CancellationToken,
}

async fn rig() -> Rig {
    let remote = server(spec_1080(), |_| {}).await;
    let addr = remote.local_addr().to_string();
    let agent = LocalAgent::start(
        key(),
        AgentOptions::default(),
        vec![EndpointSetup {
            interface_id: "monitor".into(),
            addr: addr.clone(),
            connector: TcpConnector { addr },
            mapping: mapping(),
            resolution: None,
        }],
    );
    assert!(agent.wait_connected(Duration::from_secs(5)).await);
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("127.0.0.1:{}", listener.local_addr().unwrap().port());
    let cancel = CancellationToken::new();
    tokio::spawn(bridge::serve(listener, agent.clone(), cancel.clone()));
    Rig {
        remote,
        agent,
        base,
        cancel,
    }
}

impl Rig {
    async fn stop(self) {
        self.cancel.cancel();
        self.agent.shutdown().await;
        self.remote.shutdown().await;
    }
}

#[tokio::test]
async fn posted_action_is_dispatched_and_reported() {
    let rig = rig().await;
    let http = reqwest::Client::new();
    let status: Vec<EndpointStatus> = http
        .get(format!("http://{}/endpoints", rig.base))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(status.len(), 1);
    assert_eq!(status[0].state, LinkState::Up);

    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{}/dispatch/stream", rig.base))
        .await
        .unwrap();

    let resp = http
        .post(format!("http://{}/actions", rig.base))
        .header("Origin", "http://ui.test")
        .json(&json!({
            "interface_id": "local",
            "widget_id": "hr_field",
            "action": "set_value",
            "payload": "64"
        }))
        .send()
        .await
        .unwrap();
    assert!(resp.status().is_success());
    assert!(resp.headers().contains_key("access-control-allow-origin"));
    let summary: DispatchSummary = resp.json().await.unwrap();
    assert_eq!(summary.enqueued, 1);

    let report = match timeout(Duration::from_secs(5), ws.next()).await.unwrap() {
        Some(Ok(WsMessage::Text(text))) => serde_json::from_str::<DeliveryReport>(&text).unwrap(),
        other => panic!("unexpected {other:?}"),
    };
    assert_eq!(report.interface_id, "monitor");
    assert_eq!(report.seq, 1);
    assert_eq!(report.outcome, DeliveryOutcome::Applied);
    assert_eq!(field(&rig.remote, "hr", "committed"), "64");
    rig.stop().await;
}

#[tokio::test]
async fn malformed_actions_are_client_errors() {
    let rig = rig().await;
    let http = reqwest::Client::new();
    let url = format!("http://{}/actions", rig.base);
    let bad_action = http
        .post(&url)
        .json(&json!({ "interface_id": "local", "widget_id": "hr_field", "action": "explode" }))
        .send()
        .await
        .unwrap();
    assert_eq!(bad_action.status(), 400);
    let body: serde_json::Value = bad_action.json().await.unwrap();
    assert!(body["error"].as_str().unwrap().contains("explode"));

    let missing_field = http.post(&url).json(&json!({ "widget_id": "x" })).send().await.unwrap();
    assert!(missing_field.status().is_client_error());

    // Unmapped is not an error: the summary says which endpoint skipped it.
    let unmapped: DispatchSummary = http
        .post(&url)
        .json(&json!({ "interface_id": "local", "widget_id": "ghost", "action": "click" }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(unmapped.enqueued, 0);
    assert_eq!(rig.remote.state().controls_applied, 0);
    rig.stop().await;
}
