//! HTTP/WebSocket front door to a [`LocalAgent`] for browser UIs.
//!
//! - `POST /actions` with a [`RawAction`] body dispatches it and answers with
//!   the [`DispatchSummary`](sink_core::api::DispatchSummary).
//! - `GET /endpoints` lists endpoint states.
//! - `GET /dispatch/stream` upgrades to a WebSocket that pushes one
//!   [`DeliveryReport`](sink_core::api::DeliveryReport) per settled item.

use axum::extract::ws::{Message as WsMessage, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use sink_core::api::{DeliveryReport, RawAction};
use tokio::net::TcpListener;
use tokio::sync::broadcast;
use tokio::sync::broadcast::error::RecvError;
use tokio_util::sync::CancellationToken;
use tower_http::cors::CorsLayer;
use tracing::warn;

use super::{DispatchError, LocalAgent};

pub fn router(agent: LocalAgent) -> Router {
    Router::new()
        .route("/actions", post(post_action))
        .route("/endpoints", get(endpoints))
        .route("/dispatch/stream", get(stream))
        .layer(CorsLayer::permissive())
        .with_state(agent)
}

/// Serves the bridge until `cancel` fires.
pub async fn serve(listener: TcpListener, agent: LocalAgent, cancel: CancellationToken) -> std::io::Result<()> {
    axum::serve(listener, router(agent))
        .with_graceful_shutdown(cancel.cancelled_owned())
        .await
}

async fn post_action(State(agent): State<LocalAgent>, Json(raw): Json<RawAction>) -> Response {
    match agent.dispatch_raw(&raw).await {
        Ok(summary) => Json(summary).into_response(),
        Err(e @ DispatchError::BadInput(_)) => {
            (StatusCode::BAD_REQUEST, Json(json!({ "error": e.to_string() }))).into_response()
        }
        Err(e @ DispatchError::Closed) => {
            (StatusCode::SERVICE_UNAVAILABLE, Json(json!({ "error": e.to_string() }))).into_response()
        }
    }
}

async fn endpoints(State(agent): State<LocalAgent>) -> Response {
    Json(agent.endpoints()).into_response()
}

async fn stream(ws: WebSocketUpgrade, State(agent): State<LocalAgent>) -> Response {
    // Subscribe before the 101 goes out so nothing settled after the
    // handshake is missed.
    let rx = agent.subscribe();
    ws.on_upgrade(move |socket| push_reports(socket, rx))
}

async fn push_reports(mut socket: WebSocket, mut rx: broadcast::Receiver<DeliveryReport>) {
    loop {
        tokio::select! {
            report = rx.recv() => match report {
                Ok(report) => {
                    let text = serde_json::to_string(&report).expect("report serializes");
                    if socket.send(WsMessage::Text(text.into())).await.is_err() {
                        return;
                    }
                }
                Err(RecvError::Lagged(n)) => warn!(skipped = n, "dispatch stream subscriber lagged"),
                Err(RecvError::Closed) => return,
            },
            incoming = socket.recv() => match incoming {
                Some(Ok(WsMessage::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => {}
            },
        }
    }
}
