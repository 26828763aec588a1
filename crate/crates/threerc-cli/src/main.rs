//! Command-line front end: config validation, feed debugging, crash
//! campaigns, trace replays, and campaign reports.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use threerc::actions::ProfileNamespace;
use threerc::cluster::parse_hosts_def;
use threerc::fsm::StageConfig;
use threerc::monitor::{parse_status_feed, render_status_feed, MonitorSample, MonitorSnapshot};
use threerc::placement::PlacementMode;
use threerc::sim::{
    campaign_to_csv, parse_replay_script, replay_with_store, run_campaign, scenario_preset,
    TimingModel, SCENARIO_NAMES,
};
use threerc::stats::report;
use threerc::store::{DirStateStore, MemStateStore};
use threerc::time::Timestamp;

/// Cluster used when no --config is given: two physical hosts and one
/// reinstallable VM.
const BUILTIN_HOSTS_DEF: &str = "\
# TYPE HOSTNAME MAXL INST OS MW
PH alfa01 10
PH alfa02 10
VM vrt1 1 sl4-32 ig_CE
";

/// Directory prefixed to relative output paths, when set.
const OUT_DIR_ENV: &str = "THREERC_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "threerc",
    version,
    about = "Reboot/restart/reinstall recovery controller and cluster fault simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlacementArg {
    /// Least loaded eligible host, ties by VM count then declaration order.
    MinLoad,
    /// Last eligible host in declaration order (legacy scan order).
    LastEligible,
}

impl From<PlacementArg> for PlacementMode {
    fn from(arg: PlacementArg) -> Self {
        match arg {
            PlacementArg::MinLoad => PlacementMode::MinLoad,
            PlacementArg::LastEligible => PlacementMode::LastEligible,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a hosts.def file; exits 0 when valid, 1 with a line-numbered
    /// diagnostic otherwise.
    ValidateConfig { path: PathBuf },
    /// Monitor feed debugging helpers.
    Feed {
        #[command(subcommand)]
        action: FeedCommand,
    },
    /// Run a seeded crash campaign and write the samples as CSV.
    Simulate {
        /// Named crash scenario: switchoff, loadhang, destructive, glitch,
        /// awareness.
        #[arg(long)]
        scenario: String,
        /// Number of independent trials.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        /// Campaign seed; trial i derives its own child seed from it.
        #[arg(long)]
        seed: u64,
        /// hosts.def path; a built-in two-host cluster is used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "min-load")]
        placement: PlacementArg,
        /// Stage schedule file overriding the scenario preset.
        #[arg(long)]
        stage_config: Option<PathBuf>,
        /// Host to crash instead of the scenario default.
        #[arg(long)]
        target: Option<String>,
        /// Jitter the 70 s detection latency by the monitor poll interval.
        #[arg(long)]
        detection_jitter: bool,
    },
    /// Replay a scripted trace and emit the controller log.
    Replay {
        #[arg(long)]
        script: PathBuf,
        /// Log output path; stdout when omitted.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Persist per-VM state files under this directory.
        #[arg(long)]
        state_dir: Option<PathBuf>,
        /// Write staged boot links under this directory.
        #[arg(long)]
        pxe_dir: Option<PathBuf>,
    },
    /// Summarize a campaign CSV as JSON.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        /// Histogram bin width in seconds.
        #[arg(long, default_value_t = 5.0)]
        bin_width: f64,
        /// JSON output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum FeedCommand {
    /// Parse a feed file and print it back normalized.
    Parse {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Build a feed from a `host load last_ping` table.
    Render {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn out_path(path: PathBuf) -> PathBuf {
    if path.is_relative() {
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            if !dir.is_empty() {
                return Path::new(&dir).join(path);
            }
        }
    }
    path
}

fn emit(out: Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => {
            let path = out_path(path);
            fs::write(&path, content)
                .with_context(|| format!("cannot write {}", path.display()))?;
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::ValidateConfig { path } => {
            let text = fs::read_to_string(&path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            let config = parse_hosts_def(&text)?;
            let phs = config.phs().count();
            let vms = config.vms().count();
            println!(
                "OK: {} hosts ({phs} physical, {vms} virtual)",
                config.hosts().len()
            );
            Ok(())
        }
        Command::Feed { action } => match action {
            FeedCommand::Parse { input } => {
                let text = fs::read_to_string(&input)
                    .with_context(|| format!("cannot read {}", input.display()))?;
                let snapshot = parse_status_feed(&text, Timestamp::EPOCH)?;
                print!("{}", render_status_feed(&snapshot));
                Ok(())
            }
            FeedCommand::Render { input } => {
                let text = fs::read_to_string(&input)
                    .with_context(|| format!("cannot read {}", input.display()))?;
                let mut samples = Vec::new();
                for (idx, raw) in text.lines().enumerate() {
                    let line = raw.split('#').next().unwrap_or("").trim();
                    if line.is_empty() {
                        continue;
                    }
                    let fields: Vec<&str> = line.split_whitespace().collect();
                    if fields.len() != 3 {
                        bail!("line {}: expected `host load last_ping`", idx + 1);
                    }
                    let load = threerc::cluster::Load::parse(fields[1])
                        .ok_or_else(|| anyhow!("line {}: bad load `{}`", idx + 1, fields[1]))?;
                    let ping: u32 = fields[2]
                        .parse()
                        .map_err(|_| anyhow!("line {}: bad last_ping `{}`", idx + 1, fields[2]))?;
                    samples.push(MonitorSample::new(fields[0], load, ping));
                }
                let snapshot = MonitorSnapshot::new(Timestamp::EPOCH, samples);
                print!("{}", render_status_feed(&snapshot));
                Ok(())
            }
        },
        Command::Simulate {
            scenario,
            trials,
            seed,
            config,
            out,
            placement,
            stage_config,
            target,
            detection_jitter,
        } => {
            let mut preset = scenario_preset(&scenario).ok_or_else(|| {
                anyhow!(
                    "unknown scenario `{scenario}` (expected one of: {})",
                    SCENARIO_NAMES.join(", ")
                )
            })?;
            let hosts_text = match &config {
                Some(path) => fs::read_to_string(path)
                    .with_context(|| format!("cannot read {}", path.display()))?,
                None => BUILTIN_HOSTS_DEF.to_string(),
            };
            let cluster = parse_hosts_def(&hosts_text)?;
            if let Some(target) = target {
                preset.target = Some(target);
            }
            if let Some(path) = stage_config {
                let text = fs::read_to_string(&path)
                    .with_context(|| format!("cannot read {}", path.display()))?;
                preset.stage = StageConfig::parse(&text).map_err(|e| anyhow!(e))?;
            }
            let mut timing = TimingModel::default();
            timing.detection.jitter = detection_jitter;
            let samples = run_campaign(&cluster, &preset, &timing, placement.into(), trials, seed)?;
            emit(out, &campaign_to_csv(&samples, &scenario, seed))
        }
        Command::Replay {
            script,
            log,
            state_dir,
            pxe_dir,
        } => {
            let text = fs::read_to_string(&script)
                .with_context(|| format!("cannot read {}", script.display()))?;
            let parsed = parse_replay_script(&text)?;
            let namespace = match pxe_dir {
                Some(dir) => ProfileNamespace::backed_by_dir(out_path(dir))?,
                None => ProfileNamespace::in_memory(),
            };
            let outcome = match state_dir {
                Some(dir) => {
                    let store = DirStateStore::open(out_path(dir))?;
                    replay_with_store(&parsed, store, namespace)?
                }
                None => replay_with_store(&parsed, MemStateStore::new(), namespace)?,
            };
            emit(log, &outcome.log)
        }
        Command::Report {
            input,
            bin_width,
            out,
        } => {
            let text = fs::read_to_string(&input)
                .with_context(|| format!("cannot read {}", input.display()))?;
            let json = report(&text, bin_width)?;
            emit(out, &format!("{json}\n"))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
