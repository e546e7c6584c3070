//! Command-line front end: threshold tables, mutual-information sweeps,
//! session simulation and self-verification.

pub mod commands;
pub mod config;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use bb84_attacks::StrategyKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use config::{AttackKind, FileConfig, Format, RuleArg};

/// Version of every JSON document this tool writes.
pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] bb84_attacks::Error),
    #[error("write failed: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Parser)]
#[command(
    name = "bb84-attacks",
    version,
    about = "BB84 eavesdropping with weak coherent pulses and lossy channels"
)]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// JSON file supplying defaults for any parameter; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Largest tolerable error rate for every strategy.
    Thresholds(ChannelArgs),
    /// Mutual information of Alice–Bob and Alice–Eve along an attack curve.
    Sweep(SweepArgs),
    /// Monte Carlo session of weak coherent pulses.
    Simulate(SimulateArgs),
    /// Internal consistency checks of the probe construction and the optics.
    Verify,
}

#[derive(Debug, Clone, Args)]
pub struct ChannelArgs {
    /// Mean photon number per pulse [default: 1].
    #[arg(long)]
    pub mu: Option<f64>,
    /// Channel transmission [default: 0.9].
    #[arg(long)]
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Strategy: ir, opt, bs-ir, bs-opt or pns.
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: Option<StrategyKind>,
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Smallest error rate [default: 0].
    #[arg(long)]
    pub d_min: Option<f64>,
    /// Largest error rate [default: the largest the strategy can cause].
    #[arg(long)]
    pub d_max: Option<f64>,
    /// Number of intervals; rows = steps + 1 [default: 100].
    #[arg(long)]
    pub steps: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Number of pulses Alice sends [default: 1000000].
    #[arg(long)]
    pub pulses: Option<u64>,
    /// Random seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Independent random streams run in parallel [default: 1].
    #[arg(long)]
    pub shards: Option<u64>,
    /// Eavesdropping strategy [default: none].
    #[arg(long, value_enum)]
    pub attack: Option<AttackKind>,
    /// Intercept fraction for `ir` [default: 1].
    #[arg(long)]
    pub eps: Option<f64>,
    /// Attack-level disturbance for opt, bs-ir, bs-opt and pns [default: 0].
    #[arg(long)]
    pub d: Option<f64>,
    /// Splitter transmission for bs-ir and bs-opt [default: eta].
    #[arg(long)]
    pub t: Option<f64>,
    /// Blocked fraction of single-photon pulses for pns [default: calibrated to eta, capped at 1].
    #[arg(long)]
    pub kappa: Option<f64>,
    /// How Eve combines several photons into one guess [default: single-result].
    #[arg(long, value_enum)]
    pub rule: Option<RuleArg>,
    /// Compare statistics with closed-form predictions; exit 1 beyond 3σ.
    #[arg(long)]
    pub check: bool,
}

fn parse_strategy(s: &str) -> Result<StrategyKind, String> {
    s.parse::<StrategyKind>().map_err(|e| e.to_string())
}

/// Provenance record written to stderr as one JSON line with every command.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub schema_version: u32,
    pub command: &'a str,
    /// Merged parameters in config-file form; passing them back via
    /// `--config` reproduces the run.
    pub parameters: &'a FileConfig,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub timestamp_unix: u64,
}

/// Formatted result of a command.
pub struct Rendered {
    pub stdout: String,
    pub exit_code: i32,
    pub command: &'static str,
    pub parameters: FileConfig,
    /// Message for stderr, e.g. the worst failing check.
    pub diagnostics: Option<String>,
}

pub(crate) fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

pub(crate) fn with_schema(command: &str, body: Value) -> Value {
    let mut map = serde_json::Map::new();
    map.insert("schema_version".into(), SCHEMA_VERSION.into());
    map.insert("command".into(), command.into());
    if let Value::Object(fields) = body {
        map.extend(fields);
    }
    Value::Object(map)
}

/// Parses `args` (including the program name) and runs the command, writing
/// results to `out` and manifests and errors to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(text.as_bytes());
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(rendered) => {
            let manifest = RunManifest {
                schema_version: SCHEMA_VERSION,
                command: rendered.command,
                parameters: &rendered.parameters,
                seed: rendered.parameters.seed,
                version: env!("CARGO_PKG_VERSION"),
                timestamp_unix: SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs()),
            };
            let line = serde_json::to_string(&serde_json::json!({ "manifest": manifest }))
                .expect("serializable manifest");
            let written = out
                .write_all(rendered.stdout.as_bytes())
                .and_then(|_| writeln!(err, "{line}"))
                .and_then(|_| match &rendered.diagnostics {
                    Some(msg) => writeln!(err, "{msg}"),
                    None => Ok(()),
                });
            match written {
                Ok(()) => rendered.exit_code,
                Err(_) => EXIT_USAGE,
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn execute(cli: &Cli) -> Result<Rendered, CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let format = config::pick(cli.format, file.format, Format::Text);
    match &cli.command {
        Command::Thresholds(args) => commands::thresholds(args, &file, format),
        Command::Sweep(args) => commands::sweep(args, &file, format),
        Command::Simulate(args) => commands::simulate(args, &file, format),
        Command::Verify => Ok(verify::verify(format)),
    }
}
