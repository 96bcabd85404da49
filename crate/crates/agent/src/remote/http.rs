//! HTTP view of a remote agent's screen.
//!
//! - `GET /state` returns the current [`StateDocument`](sink_core::api::StateDocument).
//! - `GET /state/stream` upgrades to a WebSocket. The first message is an
//!   `initial` event with the current state; after that exactly one
//!   `control` event is pushed per CONTROL that passed the replay guard.

use axum::extract::ws::{Message as WsMessage, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use sink_core::api::{StateCause, StateEvent};
use tokio::net::TcpListener;
use tokio::sync::broadcast::error::RecvError;
use tokio_util::sync::CancellationToken;
use tower_http::cors::CorsLayer;
use tracing::warn;

use super::RemoteHandle;

pub fn router(handle: RemoteHandle) -> Router {
    Router::new()
        .route("/state", get(state))
        .route("/state/stream", get(stream))
        .layer(CorsLayer::permissive())
        .with_state(handle)
}

pub async fn serve(listener: TcpListener, handle: RemoteHandle, cancel: CancellationToken) -> std::io::Result<()> {
    axum::serve(listener, router(handle))
        .with_graceful_shutdown(cancel.cancelled_owned())
        .await
}

async fn state(State(handle): State<RemoteHandle>) -> Response {
    Json(handle.state()).into_response()
}

async fn stream(ws: WebSocketUpgrade, State(handle): State<RemoteHandle>) -> Response {
    ws.on_upgrade(move |socket| push_events(socket, handle))
}

async fn send_event(socket: &mut WebSocket, event: &StateEvent) -> bool {
    let text = serde_json::to_string(event).expect("state event serializes");
    socket.send(WsMessage::Text(text.into())).await.is_ok()
}

async fn push_events(mut socket: WebSocket, handle: RemoteHandle) {
    // Subscribe first so no CONTROL between the snapshot and the
    // subscription goes unreported.
    let mut rx = handle.subscribe();
    let initial = StateEvent {
        cause: StateCause::Initial,
        state: handle.state(),
    };
    if !send_event(&mut socket, &initial).await {
        return;
    }
    loop {
        tokio::select! {
            event = rx.recv() => match event {
                Ok(event) => {
                    if !send_event(&mut socket, &event).await {
                        return;
                    }
                }
                Err(RecvError::Lagged(n)) => warn!(skipped = n, "state stream subscriber lagged"),
                Err(RecvError::Closed) => {
                    let _ = socket.send(WsMessage::Close(None)).await;
                    return;
                }
            },
            incoming = socket.recv() => match incoming {
                Some(Ok(WsMessage::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => {}
            },
        }
    }
}
