use std::collections::{HashMap, HashSet};
use std::time::Duration;

use sink_agent::local::{bridge, DispatchError, LocalAgent, LocalConfig};
use sink_client::StateClient;
use sink_core::api::{DeliveryOutcome, DeliveryReport, EndpointDispatch, LinkState, StateDocument};
use tokio::net::TcpListener;
use tokio::sync::broadcast::{self, error::RecvError};
use tokio::time::{timeout_at, Instant};
use tokio_util::sync::CancellationToken;

use crate::args::{ActionArgs, ConnectArgs, ConnectCommand};
use crate::script::{self, Script, Step, Target};
use crate::summary::{RequirementResult, ScriptSummary};
use crate::{read_file, serve, CliError, CliResult, Exit};

/// How long `send` and each script requirement wait for delivery reports.
pub const SETTLE_LIMIT: Duration = Duration::from_secs(30);

pub async fn run(a: ConnectArgs) -> CliResult {
    let cfg = LocalConfig::load(&a.config).map_err(CliError::config)?;
    // Check the script before connecting anywhere.
    let script = match &a.command {
        ConnectCommand::RunScript { file } => {
            let s = script::parse(&read_file(file)?)
                .map_err(|e| CliError::config(format!("{}: {e}", file.display())))?;
            Some(s)
        }
        _ => None,
    };
    let endpoints = script_endpoints(&cfg);
    if let Some(s) = &script {
        check_targets(s, &endpoints)?;
    }
    let agent = LocalAgent::from_config(&cfg).map_err(CliError::config)?;
    let wait = Duration::from_millis(a.wait_ms);
    let result = async {
        match a.command {
            ConnectCommand::Send(action) => {
                require_live(&agent, wait).await?;
                send(&agent, &action).await
            }
            ConnectCommand::RunScript { .. } => {
                require_live(&agent, wait).await?;
                let s = script.as_ref().expect("parsed above");
                let summary = run_script(&agent, s, &endpoints, SETTLE_LIMIT).await;
                println!("{}", summary.render());
                Ok(if summary.all_passed() { Exit::Success } else { Exit::Validation })
            }
            ConnectCommand::Bridge { port, bind } => serve_bridge(&agent, &bind, port).await,
        }
    }
    .await;
    agent.shutdown().await;
    result
}

/// Waits for the links to settle; fails only if no endpoint came up.
async fn require_live(agent: &LocalAgent, wait: Duration) -> Result<(), CliError> {
    agent.wait_connected(wait).await;
    let status = agent.endpoints();
    if status.iter().any(|e| e.state == LinkState::Up) {
        for e in status.iter().filter(|e| e.state != LinkState::Up) {
            eprintln!("warning: endpoint {} ({}) is not connected", e.interface_id, e.addr);
        }
        return Ok(());
    }
    let detail: Vec<String> = status
        .iter()
        .map(|e| format!("{} at {} is {:?}", e.interface_id, e.addr, e.state).to_lowercase())
        .collect();
    Err(CliError::connectivity(format!("no endpoint reachable: {}", detail.join(", "))))
}

pub fn outcome_text(o: &DeliveryOutcome) -> String {
    match o {
        DeliveryOutcome::Applied => "applied".into(),
        DeliveryOutcome::AlreadyApplied => "already applied".into(),
        DeliveryOutcome::ReplayFailed { index } => format!("replay failed at event {index}"),
        DeliveryOutcome::Stale => "rejected as stale".into(),
        DeliveryOutcome::Sent => "sent".into(),
        DeliveryOutcome::Dropped { reason } => format!("dropped: {reason}"),
    }
}

fn delivered(o: &DeliveryOutcome) -> bool {
    matches!(o, DeliveryOutcome::Applied | DeliveryOutcome::AlreadyApplied | DeliveryOutcome::Sent)
}

/// Receives reports until every `(endpoint, seq)` in `want` has one or the deadline passes.
async fn collect_reports(
    rx: &mut broadcast::Receiver<DeliveryReport>,
    want: &HashSet<(String, u64)>,
    limit: Duration,
) -> Result<HashMap<(String, u64), DeliveryReport>, String> {
    let deadline = Instant::now() + limit;
    let mut got = HashMap::new();
    while got.len() < want.len() {
        match timeout_at(deadline, rx.recv()).await {
            Err(_) => break,
            Ok(Ok(r)) => {
                let k = (r.interface_id.clone(), r.seq);
                if want.contains(&k) {
                    got.insert(k, r);
                }
            }
            Ok(Err(RecvError::Lagged(n))) => return Err(format!("missed {n} delivery reports")),
            Ok(Err(RecvError::Closed)) => break,
        }
    }
    Ok(got)
}

async fn send(agent: &LocalAgent, action: &ActionArgs) -> CliResult {
    let mut rx = agent.subscribe();
    let summary = match agent.dispatch_raw(&action.raw()).await {
        Ok(s) => s,
        Err(DispatchError::BadInput(e)) => return Err(CliError::config(e)),
        Err(e) => return Err(CliError::connectivity(e)),
    };
    let mut want = HashSet::new();
    for e in &summary.endpoints {
        match e {
            EndpointDispatch::Queued { interface_id, seq } => {
                want.insert((interface_id.clone(), *seq));
            }
            EndpointDispatch::Skipped { interface_id, reason } => {
                if reason == "unmapped input" {
                    eprintln!("warning: unmapped input {} for endpoint {interface_id}", summary.key);
                } else {
                    eprintln!("warning: endpoint {interface_id} skipped: {reason}");
                }
                println!("{interface_id}  skipped  {reason}");
            }
        }
    }
    let reports = collect_reports(&mut rx, &want, SETTLE_LIMIT).await.map_err(CliError::connectivity)?;
    let mut synchronized = 0;
    for e in &summary.endpoints {
        let EndpointDispatch::Queued { interface_id, seq } = e else { continue };
        match reports.get(&(interface_id.clone(), *seq)) {
            Some(r) => {
                if delivered(&r.outcome) {
                    synchronized += 1;
                }
                println!("{interface_id}  {}  seq={seq}  {:.2} ms", outcome_text(&r.outcome), r.latency_ms);
            }
            None => println!("{interface_id}  unsettled  seq={seq}"),
        }
    }
    let noun = if synchronized == 1 { "endpoint" } else { "endpoints" };
    println!("{synchronized} {noun} synchronized");
    Ok(Exit::Success)
}

/// An endpoint as seen by scenario scripts.
#[derive(Debug, Clone)]
pub struct ScriptEndpoint {
    pub interface_id: String,
    pub state: Option<StateClient>,
}

fn script_endpoints(cfg: &LocalConfig) -> Vec<ScriptEndpoint> {
    cfg.endpoints
        .iter()
        .map(|e| ScriptEndpoint {
            interface_id: e.interface_id.clone(),
            state: e.state_url.as_deref().map(StateClient::new),
        })
        .collect()
}

fn check_targets(s: &Script, endpoints: &[ScriptEndpoint]) -> Result<(), CliError> {
    for x in s.requirements.iter().flat_map(|r| &r.expects) {
        let ok = match &x.target {
            Target::All => endpoints.iter().any(|e| e.state.is_some()),
            Target::Endpoint(id) => endpoints.iter().any(|e| &e.interface_id == id && e.state.is_some()),
        };
        if !ok {
            return Err(CliError::config(format!(
                "script line {}: no endpoint with a state_url matches {:?}",
                x.line,
                match &x.target {
                    Target::All => "*",
                    Target::Endpoint(id) => id,
                }
            )));
        }
    }
    Ok(())
}

/// Runs every requirement in order. A requirement passes when each action
/// reached every endpoint, each CONTROL was delivered, and every expectation
/// holds.
pub async fn run_script(agent: &LocalAgent, s: &Script, endpoints: &[ScriptEndpoint], settle: Duration) -> ScriptSummary {
    let mut rx = agent.subscribe();
    let mut results = Vec::with_capacity(s.requirements.len());
    for req in &s.requirements {
        let mut failures = Vec::new();
        let mut want = HashSet::new();
        for step in &req.steps {
            match step {
                Step::Sleep(d) => tokio::time::sleep(*d).await,
                Step::Action { line, action } => match agent.dispatch_raw(action).await {
                    Ok(summary) => {
                        for e in summary.endpoints {
                            match e {
                                EndpointDispatch::Queued { interface_id, seq } => {
                                    want.insert((interface_id, seq));
                                }
                                EndpointDispatch::Skipped { interface_id, reason } => {
                                    failures.push(format!("line {line}: {interface_id} skipped: {reason}"));
                                }
                            }
                        }
                    }
                    Err(e) => failures.push(format!("line {line}: {e}")),
                },
            }
        }
        let reports = match collect_reports(&mut rx, &want, settle).await {
            Ok(r) => r,
            Err(e) => {
                failures.push(e);
                HashMap::new()
            }
        };
        let mut latencies = Vec::new();
        let mut sorted: Vec<_> = want.iter().collect();
        sorted.sort();
        for k in sorted {
            match reports.get(k) {
                Some(r) if r.outcome == DeliveryOutcome::Applied => latencies.push(r.latency_ms),
                Some(r) if delivered(&r.outcome) => {}
                Some(r) => failures.push(format!("{} seq {}: {}", k.0, k.1, outcome_text(&r.outcome))),
                None => failures.push(format!("{} seq {}: no delivery report", k.0, k.1)),
            }
        }
        let mut states: HashMap<&str, Result<StateDocument, String>> = HashMap::new();
        for x in &req.expects {
            for ep in endpoints.iter().filter(|e| match &x.target {
                Target::All => e.state.is_some(),
                Target::Endpoint(id) => &e.interface_id == id,
            }) {
                let Some(client) = &ep.state else {
                    failures.push(format!("line {}: {} has no state URL", x.line, ep.interface_id));
                    continue;
                };
                if !states.contains_key(ep.interface_id.as_str()) {
                    let doc = client.get_state().await.map_err(|e| e.to_string());
                    states.insert(&ep.interface_id, doc);
                }
                let got = match &states[ep.interface_id.as_str()] {
                    Ok(doc) => doc.snapshot.widget(&x.widget).and_then(|w| w.field(&x.field)),
                    Err(e) => {
                        failures.push(format!("line {}: {}: {e}", x.line, ep.interface_id));
                        continue;
                    }
                };
                if got.as_deref() != Some(x.value.as_str()) {
                    failures.push(format!(
                        "line {}: {} {}.{}: want {:?}, got {}",
                        x.line,
                        ep.interface_id,
                        x.widget,
                        x.field,
                        x.value,
                        got.map(|g| format!("{g:?}")).unwrap_or_else(|| "no such field".into())
                    ));
                }
            }
        }
        let endpoints_hit: HashSet<&str> = want.iter().map(|(id, _)| id.as_str()).collect();
        results.push(RequirementResult {
            id: req.id.clone(),
            description: req.description.clone(),
            passed: failures.is_empty(),
            actions: req.actions(),
            endpoints: endpoints_hit.len(),
            latencies_ms: latencies,
            failures,
        });
    }
    ScriptSummary { results }
}

async fn serve_bridge(agent: &LocalAgent, bind: &str, port: u16) -> CliResult {
    let addr = format!("{bind}:{port}");
    let listener = TcpListener::bind(&addr)
        .await
        .map_err(|e| CliError::connectivity(format!("cannot listen on {addr}: {e} ({:?})", e.kind())))?;
    let local = listener.local_addr().map_err(CliError::connectivity)?;
    let cancel = CancellationToken::new();
    let task = tokio::spawn(bridge::serve(listener, agent.clone(), cancel.clone()));
    println!("bridge listening on http://{local} (POST /actions, GET /endpoints, ws /dispatch/stream)");
    serve::shutdown_signal().await;
    cancel.cancel();
    let _ = task.await;
    tracing::info!("shut down");
    Ok(Exit::Success)
}
