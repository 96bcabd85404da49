use std::future::Future;

use sink_agent::local::config::read_key_file;
use sink_agent::remote::{http, RemoteConfig, RemoteServer};
use tokio::net::TcpListener;

use crate::args::ServeArgs;
use crate::{load_spec, CliError, CliResult, Exit};

/// Resolves on Ctrl-C, or SIGTERM on unix.
pub async fn shutdown_signal() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        let mut term = signal(SignalKind::terminate()).expect("SIGTERM handler installs");
        tokio::select! {
            _ = tokio::signal::ctrl_c() => {}
            _ = term.recv() => {}
        }
    }
    #[cfg(not(unix))]
    let _ = tokio::signal::ctrl_c().await;
}

fn bind_error(addr: &str, e: std::io::Error) -> CliError {
    CliError::connectivity(format!("cannot listen on {addr}: {e} ({:?})", e.kind()))
}

pub async fn run(a: ServeArgs, shutdown: impl Future<Output = ()>) -> CliResult {
    let key = read_key_file(&a.key_file).map_err(CliError::config)?;
    let spec = load_spec(&a.screen_spec)?;
    let resolution = spec.resolution;
    let mut cfg = RemoteConfig::new(key, spec);
    cfg.real_time = a.real_time;
    cfg.ack = !a.no_ack;
    cfg.multi_writer = a.multi_writer;

    let addr = format!("{}:{}", a.bind, a.port);
    let server = RemoteServer::bind(&addr, cfg).await.map_err(|e| bind_error(&addr, e))?;
    let http_port = a.http_port.unwrap_or(if a.port == 0 { 0 } else { a.port.wrapping_add(1) });
    let http_addr = format!("{}:{http_port}", a.bind);
    let listener = match TcpListener::bind(&http_addr).await {
        Ok(l) => l,
        Err(e) => {
            server.shutdown().await;
            return Err(bind_error(&http_addr, e));
        }
    };
    let http_local = listener.local_addr().map_err(CliError::connectivity)?;
    let http_task = tokio::spawn(http::serve(listener, server.handle(), server.cancel_token()));

    println!("remote agent listening on {} ({resolution})", server.local_addr());
    println!("state at http://{http_local}/state, stream at ws://{http_local}/state/stream");
    shutdown.await;
    server.shutdown().await;
    let _ = http_task.await;
    tracing::info!("shut down");
    Ok(Exit::Success)
}
