#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Output;

use sink_agent::local::config::read_key_file;
use sink_agent::remote::{http, RemoteConfig, RemoteServer};
use sink_core::protocol::SessionKey;
use sink_core::screen::ScreenSpec;
use tokio::net::TcpListener;
use tokio::process::Command;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn demo_key() -> SessionKey {
    read_key_file(&fixture("demo.key")).unwrap()
}

pub fn spec(name: &str) -> ScreenSpec {
    ScreenSpec::from_toml(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

/// A remote agent with its state endpoint, running in this process.
pub struct Remote {
    pub server: RemoteServer,
    pub state_url: String,
}

impl Remote {
    pub async fn start(spec_file: &str, tweak: impl FnOnce(&mut RemoteConfig)) -> Remote {
        let mut cfg = RemoteConfig::new(demo_key(), spec(spec_file));
        tweak(&mut cfg);
        let server = RemoteServer::bind("127.0.0.1:0", cfg).await.unwrap();
        let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
        let state_url = format!("http://{}", listener.local_addr().unwrap());
        tokio::spawn(http::serve(listener, server.handle(), server.cancel_token()));
        Remote { server, state_url }
    }

    pub fn field(&self, widget: &str, name: &str) -> String {
        self.server.state().snapshot.widget(widget).unwrap().field(name).unwrap()
    }
}

/// Writes a connect config for `endpoints` (id, remote) into `dir`.
pub fn write_config(dir: &Path, endpoints: &[(&str, &Remote)], extra: &str) -> PathBuf {
    let mut text = format!(
        "key_file = {:?}\nmapping = {:?}\nkeepalive_ms = 1000\n{extra}\n",
        fixture("demo.key"),
        fixture("demo_mapping.toml")
    );
    for (id, r) in endpoints {
        let addr = r.server.local_addr();
        text.push_str(&format!(
            "\n[[endpoint]]\ninterface_id = \"{id}\"\nhost = \"{}\"\nport = {}\nstate_url = \"{}\"\n",
            addr.ip(),
            addr.port(),
            r.state_url
        ));
    }
    let path = dir.join("connect.toml");
    std::fs::write(&path, text).unwrap();
    path
}

pub fn sink() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sink"));
    c.kill_on_drop(true);
    c
}

pub async fn sink_output(args: &[&str]) -> Output {
    sink().args(args).output().await.unwrap()
}

pub fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}
