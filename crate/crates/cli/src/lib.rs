//! The `sink` command line: remote agent server, local agent client and
//! offline mapping checks.
//!
//! Exit codes: 0 success (including partial synchronization), 1 config or
//! usage error, 2 connectivity failure, 3 validation failure.

pub mod args;
pub mod connect;
pub mod script;
pub mod serve;
pub mod summary;
pub mod validate;

use std::fmt;
use std::path::Path;

use args::{Cli, Command, MapValidateArgs, PostArgs, StateArgs};
use sink_client::{BridgeClient, ClientError, StateClient};
use sink_core::api::EndpointDispatch;
use sink_core::mapping::load_mapping;
use sink_core::screen::ScreenSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Config = 1,
    Connectivity = 2,
    Validation = 3,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl fmt::Display) -> Self {
        CliError {
            exit: Exit::Config,
            message: message.to_string(),
        }
    }

    pub fn connectivity(message: impl fmt::Display) -> Self {
        CliError {
            exit: Exit::Connectivity,
            message: message.to_string(),
        }
    }

    pub fn validation(message: impl fmt::Display) -> Self {
        CliError {
            exit: Exit::Validation,
            message: message.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        match e {
            ClientError::Status { status, .. } if (400..500).contains(&status) => CliError::config(e),
            e => CliError::connectivity(e),
        }
    }
}

pub type CliResult = Result<Exit, CliError>;

pub async fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Serve(a) => serve::run(a, serve::shutdown_signal()).await,
        Command::Connect(a) => connect::run(a).await,
        Command::MapValidate(a) => map_validate(&a),
        Command::State(a) => state(&a).await,
        Command::Post(a) => post(&a).await,
    }
}

pub(crate) fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub(crate) fn load_spec(path: &Path) -> Result<ScreenSpec, CliError> {
    ScreenSpec::from_toml(&read_file(path)?).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn map_validate(a: &MapValidateArgs) -> CliResult {
    let mapping = load_mapping(&read_file(&a.mapping)?)
        .map_err(|e| CliError::validation(format!("{}: {e}", a.mapping.display())))?;
    let screens = a
        .screen_specs
        .iter()
        .map(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            load_spec(p).map(|s| (name, s))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let checks = validate::validate(&mapping, &screens);
    for c in &checks {
        println!("{}", validate::render(c));
    }
    let passed = checks.iter().filter(|c| c.passed()).count();
    println!("{passed}/{} checks passed", checks.len());
    Ok(if passed == checks.len() { Exit::Success } else { Exit::Validation })
}

async fn state(a: &StateArgs) -> CliResult {
    let doc = StateClient::new(&a.url).get_state().await?;
    println!("{}", serde_json::to_string_pretty(&doc).expect("state serializes"));
    Ok(Exit::Success)
}

async fn post(a: &PostArgs) -> CliResult {
    let summary = BridgeClient::new(&a.url).post_action(&a.action.raw()).await?;
    for e in &summary.endpoints {
        match e {
            EndpointDispatch::Queued { interface_id, seq } => println!("{interface_id}  queued  seq={seq}"),
            EndpointDispatch::Skipped { interface_id, reason } => println!("{interface_id}  skipped  {reason}"),
        }
    }
    let noun = if summary.enqueued == 1 { "endpoint" } else { "endpoints" };
    println!("{} {noun} queued", summary.enqueued);
    Ok(Exit::Success)
}
