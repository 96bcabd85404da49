//! Control client: turns operator inputs into CONTROL messages for every
//! configured remote agent.
//!
//! [`LocalAgent::dispatch`] resolves a key once per endpoint and puts the
//! results on the send queue. The queue has a single consumer, the router,
//! which hands each item to the link task of its endpoint; each link owns one
//! connection and keeps its items in seq order.

pub mod bridge;
pub mod config;
mod link;

pub use config::{AgentOptions, Backpressure, ConfigError, EndpointConfig, LocalConfig};
pub use link::{backoff_delay, Connector, LinkError, LinkStatus, TcpConnector, BACKOFF_CAP, BACKOFF_SCHEDULE};

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use sink_core::api::{encode_input, DeliveryReport, DispatchSummary, EndpointDispatch, EndpointStatus, LinkState, RawAction};
use sink_core::mapping::{InputKey, Mapping, MappingError, Resolution};
use sink_core::protocol::{ControlPayload, SessionId, SessionKey};
use thiserror::Error;
use tokio::sync::{broadcast, mpsc, watch, Mutex, Semaphore, TryAcquireError};
use tokio::task::JoinHandle;
use tokio::time::Instant;
use tokio_util::sync::CancellationToken;
use tracing::warn;

use link::{run_link, Hub, LinkCtx, LinkShared, Outbound};

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("bad input: {0}")]
    BadInput(#[from] MappingError),
    #[error("agent is shut down")]
    Closed,
}

/// One endpoint as handed to [`LocalAgent::start`].
pub struct EndpointSetup<C> {
    pub interface_id: String,
    pub addr: String,
    pub connector: C,
    pub mapping: Arc<Mapping>,
    /// Overrides the resolution the remote reports.
    pub resolution: Option<Resolution>,
}

struct Endpoint {
    shared: Arc<LinkShared>,
    mapping: Arc<Mapping>,
    resolution: Option<Resolution>,
    next_seq: AtomicU64,
    /// This endpoint's share of the send queue; held until an item settles.
    permits: Arc<Semaphore>,
}

struct Routed {
    endpoint: usize,
    item: Outbound,
}

struct Inner {
    endpoints: Vec<Endpoint>,
    queue: mpsc::Sender<Routed>,
    backpressure: Backpressure,
    dispatch_lock: Mutex<()>,
    hub: Arc<Hub>,
    cancel: CancellationToken,
    tasks: std::sync::Mutex<Vec<JoinHandle<()>>>,
}

/// Handle to a running local agent. Cheap to clone.
#[derive(Clone)]
pub struct LocalAgent {
    inner: Arc<Inner>,
}

impl LocalAgent {
    /// Spawns one link task per endpoint plus the queue consumer. Must be
    /// called inside a tokio runtime.
    pub fn start<C: Connector>(key: SessionKey, opts: AgentOptions, endpoints: Vec<EndpointSetup<C>>) -> Self {
        let capacity = opts.queue_capacity.max(1);
        let (queue_tx, queue_rx) = mpsc::channel::<Routed>(capacity * endpoints.len().max(1));
        let hub = Arc::new(Hub {
            reports: broadcast::Sender::new(capacity.max(1024) * 4),
            inflight: watch::Sender::new(0),
        });
        let cancel = CancellationToken::new();
        let mut tasks = Vec::new();
        let mut links = Vec::new();
        let mut slots = Vec::new();
        for setup in endpoints {
            let shared = Arc::new(LinkShared::new(setup.interface_id, setup.addr));
            let (tx, rx) = mpsc::unbounded_channel();
            let ctx = LinkCtx {
                connector: setup.connector,
                key: key.clone(),
                session: SessionId::random(),
                hello_resolution: setup.mapping.reference_resolution,
                opts: opts.clone(),
                shared: shared.clone(),
                hub: hub.clone(),
                cancel: cancel.child_token(),
            };
            tasks.push(tokio::spawn(run_link(ctx, rx)));
            links.push((tx, shared.clone()));
            slots.push(Endpoint {
                shared,
                mapping: setup.mapping,
                resolution: setup.resolution,
                next_seq: AtomicU64::new(1),
                permits: Arc::new(Semaphore::new(capacity)),
            });
        }
        tasks.push(tokio::spawn(route(queue_rx, links, hub.clone(), cancel.clone())));
        LocalAgent {
            inner: Arc::new(Inner {
                endpoints: slots,
                queue: queue_tx,
                backpressure: opts.backpressure,
                dispatch_lock: Mutex::new(()),
                hub,
                cancel,
                tasks: std::sync::Mutex::new(tasks),
            }),
        }
    }

    /// Starts an agent with TCP links for every endpoint in `cfg`.
    pub fn from_config(cfg: &LocalConfig) -> Result<Self, ConfigError> {
        let mappings = cfg.load_mappings()?;
        let endpoints = cfg
            .endpoints
            .iter()
            .zip(mappings)
            .map(|(e, mapping)| EndpointSetup {
                interface_id: e.interface_id.clone(),
                addr: e.addr(),
                connector: TcpConnector { addr: e.addr() },
                mapping,
                resolution: e.resolution,
            })
            .collect();
        Ok(Self::start(cfg.key.clone(), cfg.options.clone(), endpoints))
    }

    pub fn dispatch_raw(&self, raw: &RawAction) -> impl std::future::Future<Output = Result<DispatchSummary, DispatchError>> + Send + '_ {
        let key = encode_input(raw);
        async move { self.dispatch(&key?).await }
    }

    /// Resolves `key` for every endpoint and enqueues one CONTROL per hit.
    ///
    /// Endpoints without a mapping for the key, without a known resolution,
    /// or already down are skipped and reported as such.
    pub async fn dispatch(&self, key: &InputKey) -> Result<DispatchSummary, DispatchError> {
        let inner = &self.inner;
        if inner.cancel.is_cancelled() {
            return Err(DispatchError::Closed);
        }
        let _order = inner.dispatch_lock.lock().await;
        let key_text = key.to_string();
        let mut results = Vec::with_capacity(inner.endpoints.len());
        let mut enqueued = 0;
        for (index, ep) in inner.endpoints.iter().enumerate() {
            let id = ep.shared.interface_id.clone();
            let skip = |reason: String| EndpointDispatch::Skipped {
                interface_id: id.clone(),
                reason,
            };
            let status = *ep.shared.status.borrow();
            if status.state == LinkState::Down {
                results.push(skip("endpoint is down".into()));
                continue;
            }
            let Some(resolution) = ep.resolution.or(status.resolution) else {
                warn!(endpoint = %id, key = %key_text, "resolution unknown (never connected); skipped");
                results.push(skip("resolution unknown".into()));
                continue;
            };
            let sequence = match ep.mapping.resolve(key, resolution) {
                Ok(seq) => seq,
                Err(MappingError::UnmappedInput(_)) => {
                    warn!(endpoint = %id, key = %key_text, "unmapped input; endpoint skipped");
                    results.push(skip("unmapped input".into()));
                    continue;
                }
                Err(e) => {
                    warn!(endpoint = %id, key = %key_text, error = %e, "cannot resolve input; endpoint skipped");
                    results.push(skip(e.to_string()));
                    continue;
                }
            };
            let permit = match inner.backpressure {
                Backpressure::Block => ep.permits.clone().acquire_owned().await.map_err(|_| DispatchError::Closed)?,
                Backpressure::Drop => match ep.permits.clone().try_acquire_owned() {
                    Ok(p) => p,
                    Err(TryAcquireError::NoPermits) => {
                        warn!(endpoint = %id, key = %key_text, "send queue full; endpoint skipped");
                        results.push(skip("send queue full".into()));
                        continue;
                    }
                    Err(TryAcquireError::Closed) => return Err(DispatchError::Closed),
                },
            };
            let payload = ControlPayload {
                interface_id: id.clone(),
                click_delay_ms: ep.mapping.click_delay_ms,
                sequence,
            };
            let seq = ep.next_seq.fetch_add(1, Ordering::SeqCst);
            let item = Outbound {
                seq,
                key: key_text.clone(),
                payload: payload.encode(),
                dispatched_at: Instant::now(),
                permit: Some(permit),
            };
            ep.shared.pending.fetch_add(1, Ordering::SeqCst);
            inner.hub.inflight.send_modify(|n| *n += 1);
            inner
                .queue
                .send(Routed { endpoint: index, item })
                .await
                .map_err(|_| DispatchError::Closed)?;
            results.push(EndpointDispatch::Queued { interface_id: id, seq });
            enqueued += 1;
        }
        Ok(DispatchSummary {
            key: key_text,
            enqueued,
            endpoints: results,
        })
    }

    /// Delivery reports for every settled item from now on.
    pub fn subscribe(&self) -> broadcast::Receiver<DeliveryReport> {
        self.inner.hub.reports.subscribe()
    }

    pub fn endpoints(&self) -> Vec<EndpointStatus> {
        self.inner
            .endpoints
            .iter()
            .map(|ep| {
                let status = *ep.shared.status.borrow();
                EndpointStatus {
                    interface_id: ep.shared.interface_id.clone(),
                    addr: ep.shared.addr.clone(),
                    state: status.state,
                    resolution: ep.resolution.or(status.resolution).map(|r| r.to_string()),
                    pending: ep.shared.pending.load(Ordering::SeqCst),
                }
            })
            .collect()
    }

    pub fn link_status(&self, interface_id: &str) -> Option<watch::Receiver<LinkStatus>> {
        self.inner
            .endpoints
            .iter()
            .find(|ep| ep.shared.interface_id == interface_id)
            .map(|ep| ep.shared.status.subscribe())
    }

    /// Waits until no endpoint is still connecting. Returns false on timeout.
    pub async fn wait_connected(&self, limit: Duration) -> bool {
        let all = async {
            for ep in &self.inner.endpoints {
                let mut rx = ep.shared.status.subscribe();
                if rx.wait_for(|s| s.state != LinkState::Connecting).await.is_err() {
                    return;
                }
            }
        };
        tokio::time::timeout(limit, all).await.is_ok()
    }

    /// Waits until every enqueued item has settled. Returns false on timeout.
    pub async fn wait_settled(&self, limit: Duration) -> bool {
        let mut rx = self.inner.hub.inflight.subscribe();
        tokio::time::timeout(limit, rx.wait_for(|n| *n == 0)).await.is_ok_and(|r| r.is_ok())
    }

    /// Items enqueued and not yet settled, across endpoints.
    pub fn in_flight(&self) -> usize {
        *self.inner.hub.inflight.borrow()
    }

    /// Stops all links; unsettled items are abandoned.
    pub async fn shutdown(&self) {
        self.inner.cancel.cancel();
        for ep in &self.inner.endpoints {
            ep.permits.close();
        }
        let tasks = std::mem::take(&mut *self.inner.tasks.lock().expect("task list lock"));
        for t in tasks {
            let _ = t.await;
        }
    }
}

/// The send queue's single consumer.
async fn route(
    mut queue: mpsc::Receiver<Routed>,
    links: Vec<(mpsc::UnboundedSender<Outbound>, Arc<LinkShared>)>,
    hub: Arc<Hub>,
    cancel: CancellationToken,
) {
    while let Some(Some(Routed { endpoint, item })) = cancel.run_until_cancelled(queue.recv()).await {
        let (tx, shared) = &links[endpoint];
        if let Err(mpsc::error::SendError(item)) = tx.send(item) {
            hub.settle(
                shared,
                item,
                sink_core::api::DeliveryOutcome::Dropped {
                    reason: "link stopped".into(),
                },
            );
        }
    }
}
