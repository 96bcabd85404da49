use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "sink", version, about = "Synchronize GUI interfaces across remote screens")]
pub struct Cli {
    /// Log more to stderr (-v warnings, -vv info, -vvv debug). RUST_LOG overrides.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a remote agent: a control server over a virtual screen.
    Serve(ServeArgs),
    /// Run a local agent against the endpoints in a config file.
    Connect(ConnectArgs),
    /// Dry-replay every mapping entry against screen specs.
    MapValidate(MapValidateArgs),
    /// Print a remote agent's state document.
    State(StateArgs),
    /// Post one action to a running local agent bridge.
    Post(PostArgs),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Control port; 0 picks a free one.
    #[arg(long, default_value_t = 7001)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    /// File holding the 16-byte session key as 32 hex characters.
    #[arg(long)]
    pub key_file: PathBuf,
    #[arg(long)]
    pub screen_spec: PathBuf,
    /// Sleep through delays while replaying instead of only advancing the screen clock.
    #[arg(long)]
    pub real_time: bool,
    /// Do not acknowledge CONTROL messages.
    #[arg(long)]
    pub no_ack: bool,
    /// Accept CONTROL from several sessions at once.
    #[arg(long)]
    pub multi_writer: bool,
    /// Port for GET /state and /state/stream. Defaults to the control port + 1.
    #[arg(long)]
    pub http_port: Option<u16>,
}

#[derive(Debug, Args)]
pub struct ConnectArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// How long to wait for endpoints before acting.
    #[arg(long, default_value_t = 5000)]
    pub wait_ms: u64,
    #[command(subcommand)]
    pub command: ConnectCommand,
}

#[derive(Debug, Subcommand)]
pub enum ConnectCommand {
    /// Dispatch one input and report per-endpoint results.
    Send(ActionArgs),
    /// Run a scenario script and print a summary table.
    RunScript {
        file: PathBuf,
    },
    /// Serve POST /actions, GET /endpoints and /dispatch/stream until interrupted.
    Bridge {
        #[arg(long, default_value_t = 7000)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
    },
}

#[derive(Debug, Args)]
pub struct ActionArgs {
    pub interface: String,
    pub widget: String,
    pub action: String,
    /// Remaining words are joined with single spaces.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    pub payload: Vec<String>,
}

impl ActionArgs {
    pub fn raw(&self) -> sink_core::api::RawAction {
        let payload = self.payload.join(" ");
        sink_core::api::RawAction::new(
            &self.interface,
            &self.widget,
            &self.action,
            (!payload.is_empty()).then_some(payload.as_str()),
        )
    }
}

#[derive(Debug, Args)]
pub struct MapValidateArgs {
    pub mapping: PathBuf,
    #[arg(required = true)]
    pub screen_specs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StateArgs {
    /// State base URL, e.g. http://127.0.0.1:7002
    pub url: String,
}

#[derive(Debug, Args)]
pub struct PostArgs {
    /// Bridge base URL, e.g. http://127.0.0.1:7000
    pub url: String,
    #[command(flatten)]
    pub action: ActionArgs,
}
