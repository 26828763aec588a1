//! Declarative replay scripts.
//!
//! A script pins every knob a trace depends on — clock window, timing
//! constants, placement mode, initial per-VM states, physical host loads —
//! and lists the timed faults to inject. Replaying it yields the exact
//! controller log for the scenario, byte for byte.
//!
//! ```text
//! start = 2008-12-14/04:25:00
//! end = 2008-12-14/04:40:00
//! tick_offset = 1
//! placement = last_eligible
//!
//! [hosts]
//! PH alfa01 10
//! PH alfa04 10
//! VM gridce 0
//!
//! [state]
//! gridce alfa01 2008-12-13/13:12:01 0
//!
//! [load]
//! alfa01 12.00
//!
//! [crash]
//! 2008-12-14/04:29:30 switchoff gridce
//! ```

use thiserror::Error;

use crate::actions::ProfileNamespace;
use crate::cluster::{parse_hosts_def, ClusterConfig, Load};
use crate::fsm::{ControllerId, StageConfig, VmRecoveryState};
use crate::placement::PlacementMode;
use crate::rng::TrialRng;
use crate::store::{MemStateStore, StateStore};
use crate::time::Timestamp;

use super::engine::{Engine, ReplayOutcome, RunEnd, SimError, SimEventKind, StopWhen};
use super::scenario::{CrashKind, DetectionLatency, TimingModel, TruncNormalSpec};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScriptError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("hosts section invalid: {0}")]
    Hosts(#[from] crate::cluster::ConfigError),
    #[error("script references undeclared host `{0}`")]
    UnknownHost(String),
}

#[derive(Debug, Clone)]
pub struct ReplayScript {
    pub start: Timestamp,
    pub end: Timestamp,
    pub tick_offset: i64,
    pub placement: PlacementMode,
    pub detection_latency: i64,
    pub aliveness_lag: i64,
    pub boot_time: i64,
    pub install_time: i64,
    pub pxe_setup: i64,
    pub daemon_restart: i64,
    pub stage: StageConfig,
    pub hosts: ClusterConfig,
    pub states: Vec<(String, VmRecoveryState)>,
    pub loads: Vec<(String, Load)>,
    pub crashes: Vec<(Timestamp, CrashKind, String)>,
    pub daemon_fails: Vec<(Timestamp, String)>,
    pub outages: Vec<(ControllerId, Timestamp, Timestamp)>,
}

impl Default for ReplayScript {
    fn default() -> Self {
        ReplayScript {
            start: Timestamp::from_secs(super::engine::CAMPAIGN_BASE_SECS),
            end: Timestamp::from_secs(super::engine::CAMPAIGN_BASE_SECS),
            tick_offset: 0,
            placement: PlacementMode::MinLoad,
            detection_latency: 70,
            aliveness_lag: 70,
            boot_time: 70,
            install_time: 352,
            pxe_setup: 10,
            daemon_restart: 20,
            stage: StageConfig::default(),
            hosts: ClusterConfig::default(),
            states: Vec::new(),
            loads: Vec::new(),
            crashes: Vec::new(),
            daemon_fails: Vec::new(),
            outages: Vec::new(),
        }
    }
}

fn crash_kind(token: &str) -> Option<CrashKind> {
    match token {
        "switchoff" => Some(CrashKind::SwitchOff),
        "loadhang" => Some(CrashKind::LoadHang {
            reboot_responsive: false,
        }),
        "loadhang_responsive" => Some(CrashKind::LoadHang {
            reboot_responsive: true,
        }),
        "destructive" => Some(CrashKind::DestructiveBootErase),
        "glitch" => Some(CrashKind::PhPowerGlitch),
        _ => None,
    }
}

pub fn parse_replay_script(text: &str) -> Result<ReplayScript, ScriptError> {
    let mut script = ReplayScript::default();
    let mut end_set = false;
    let mut section = String::new();
    let mut hosts_lines: Vec<&str> = Vec::new();
    struct Raw<'a> {
        line: usize,
        fields: Vec<&'a str>,
    }
    let mut states: Vec<Raw> = Vec::new();
    let mut loads: Vec<Raw> = Vec::new();
    let mut crashes: Vec<Raw> = Vec::new();
    let mut daemon_fails: Vec<Raw> = Vec::new();
    let mut outages: Vec<Raw> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |msg: String| ScriptError::Line { line: line_no, msg };
        // Hosts rows keep their own comment handling.
        let line = if section == "hosts" {
            raw.trim()
        } else {
            raw.split('#').next().unwrap_or("").trim()
        };
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            match section.as_str() {
                "hosts" | "state" | "load" | "crash" | "daemon_fail" | "outage" => continue,
                other => return Err(err(format!("unknown section `[{other}]`"))),
            }
        }
        match section.as_str() {
            "" => {
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| err("expected key = value".to_string()))?;
                let (key, value) = (key.trim(), value.trim());
                let bad = |what: &str| err(format!("bad {what} `{value}`"));
                match key {
                    "start" => script.start = value.parse().map_err(|_| bad("timestamp"))?,
                    "end" => {
                        script.end = value.parse().map_err(|_| bad("timestamp"))?;
                        end_set = true;
                    }
                    "tick_offset" => {
                        script.tick_offset = value.parse().map_err(|_| bad("seconds"))?
                    }
                    "placement" => {
                        script.placement = match value {
                            "min_load" => PlacementMode::MinLoad,
                            "last_eligible" => PlacementMode::LastEligible,
                            _ => return Err(bad("placement mode")),
                        }
                    }
                    "detection_latency" => {
                        script.detection_latency = value.parse().map_err(|_| bad("seconds"))?
                    }
                    "aliveness_lag" => {
                        script.aliveness_lag = value.parse().map_err(|_| bad("seconds"))?
                    }
                    "boot_time" => script.boot_time = value.parse().map_err(|_| bad("seconds"))?,
                    "install_time" => {
                        script.install_time = value.parse().map_err(|_| bad("seconds"))?
                    }
                    "pxe_setup" => script.pxe_setup = value.parse().map_err(|_| bad("seconds"))?,
                    "daemon_restart" => {
                        script.daemon_restart = value.parse().map_err(|_| bad("seconds"))?
                    }
                    "reboot_enabled" | "cycles_reboot" | "cycles_restart" | "wait_flag0"
                    | "wait_flag1" | "wait_flag2" => {
                        let merged =
                            StageConfig::parse(&format!("{key} = {value}")).map_err(err)?;
                        // Fold the single parsed key into the accumulated stage.
                        let mut stage = script.stage.clone();
                        match key {
                            "reboot_enabled" => stage.reboot_enabled = merged.reboot_enabled,
                            "cycles_reboot" => stage.reboot_cycles = merged.reboot_cycles,
                            "cycles_restart" => stage.restart_cycles = merged.restart_cycles,
                            "wait_flag0" => stage.wait_secs[0] = merged.wait_secs[0],
                            "wait_flag1" => stage.wait_secs[1] = merged.wait_secs[1],
                            _ => stage.wait_secs[2] = merged.wait_secs[2],
                        }
                        script.stage = stage;
                    }
                    other => return Err(err(format!("unknown key `{other}`"))),
                }
            }
            "hosts" => hosts_lines.push(raw),
            _ => {
                let fields: Vec<&str> = line.split_whitespace().collect();
                let raw = Raw {
                    line: line_no,
                    fields,
                };
                match section.as_str() {
                    "state" => states.push(raw),
                    "load" => loads.push(raw),
                    "crash" => crashes.push(raw),
                    "daemon_fail" => daemon_fails.push(raw),
                    "outage" => outages.push(raw),
                    _ => unreachable!("section names validated above"),
                }
            }
        }
    }

    script.hosts = parse_hosts_def(&hosts_lines.join("\n"))?;
    if !end_set {
        script.end = script.start;
    }
    let line_err = |line: usize, msg: String| ScriptError::Line { line, msg };

    for raw in states {
        if raw.fields.len() != 4 {
            return Err(line_err(raw.line, "expected `VM PH TIMESTAMP FLAG`".into()));
        }
        let vm = raw.fields[0].to_string();
        if script.hosts.vm(&vm).is_none() {
            return Err(ScriptError::UnknownHost(vm));
        }
        if script.hosts.ph(raw.fields[1]).is_none() {
            return Err(ScriptError::UnknownHost(raw.fields[1].to_string()));
        }
        let state = crate::store::parse_vm_state(&raw.fields[1..].join(" "))
            .map_err(|e| line_err(raw.line, e.to_string()))?;
        script.states.push((vm, state));
    }
    for raw in loads {
        if raw.fields.len() != 2 {
            return Err(line_err(raw.line, "expected `PH LOAD`".into()));
        }
        if script.hosts.ph(raw.fields[0]).is_none() {
            return Err(ScriptError::UnknownHost(raw.fields[0].to_string()));
        }
        let load = Load::parse(raw.fields[1])
            .ok_or_else(|| line_err(raw.line, format!("bad load `{}`", raw.fields[1])))?;
        script.loads.push((raw.fields[0].to_string(), load));
    }
    for raw in crashes {
        if raw.fields.len() != 3 {
            return Err(line_err(
                raw.line,
                "expected `TIMESTAMP KIND TARGET`".into(),
            ));
        }
        let at: Timestamp = raw.fields[0]
            .parse()
            .map_err(|_| line_err(raw.line, format!("bad timestamp `{}`", raw.fields[0])))?;
        let kind = crash_kind(raw.fields[1])
            .ok_or_else(|| line_err(raw.line, format!("unknown crash kind `{}`", raw.fields[1])))?;
        let target = raw.fields[2].to_string();
        let ok = match kind {
            CrashKind::PhPowerGlitch => script.hosts.ph(&target).is_some(),
            _ => script.hosts.vm(&target).is_some(),
        };
        if !ok {
            return Err(ScriptError::UnknownHost(target));
        }
        script.crashes.push((at, kind, target));
    }
    for raw in daemon_fails {
        if raw.fields.len() != 2 {
            return Err(line_err(raw.line, "expected `TIMESTAMP PH`".into()));
        }
        let at: Timestamp = raw.fields[0]
            .parse()
            .map_err(|_| line_err(raw.line, format!("bad timestamp `{}`", raw.fields[0])))?;
        if script.hosts.ph(raw.fields[1]).is_none() {
            return Err(ScriptError::UnknownHost(raw.fields[1].to_string()));
        }
        script.daemon_fails.push((at, raw.fields[1].to_string()));
    }
    for raw in outages {
        if raw.fields.len() != 3 {
            return Err(line_err(raw.line, "expected `A|B FROM TO`".into()));
        }
        let id = match raw.fields[0] {
            "A" => ControllerId::A,
            "B" => ControllerId::B,
            other => return Err(line_err(raw.line, format!("bad controller `{other}`"))),
        };
        let from: Timestamp = raw.fields[1]
            .parse()
            .map_err(|_| line_err(raw.line, format!("bad timestamp `{}`", raw.fields[1])))?;
        let to: Timestamp = raw.fields[2]
            .parse()
            .map_err(|_| line_err(raw.line, format!("bad timestamp `{}`", raw.fields[2])))?;
        script.outages.push((id, from, to));
    }
    Ok(script)
}

/// Replays a script against an in-memory state store.
pub fn replay(script: &ReplayScript) -> Result<ReplayOutcome, SimError> {
    replay_with_store(script, MemStateStore::new(), ProfileNamespace::in_memory())
}

/// Replays a script, persisting controller state through `store` and boot
/// links through `namespace`.
pub fn replay_with_store<S: StateStore>(
    script: &ReplayScript,
    store: S,
    namespace: ProfileNamespace,
) -> Result<ReplayOutcome, SimError> {
    let timing = TimingModel {
        detection: DetectionLatency {
            base: script.detection_latency,
            jitter: false,
        },
        pxe_setup: script.pxe_setup,
        boot: TruncNormalSpec::constant(script.boot_time),
        install: TruncNormalSpec::constant(script.install_time),
        daemon_restart: script.daemon_restart,
    };
    let mut engine = Engine::new(
        script.hosts.clone(),
        store,
        script.stage.clone(),
        script.placement,
        timing,
        TrialRng::new(0),
        script.tick_offset,
        script.aliveness_lag,
    );
    engine.namespace = namespace;
    for (ph, load) in &script.loads {
        if let Some(runtime) = engine.cluster.phs.get_mut(ph) {
            runtime.load = *load;
        }
    }
    for (vm, state) in &script.states {
        engine
            .ctl
            .write(vm, state, u32::from(state.flag.as_u8() > 0))
            .map_err(|e| SimError::Tick(crate::fsm::TickError::Store(e.to_string())))?;
        if let Some(runtime) = engine.cluster.vms.get_mut(vm) {
            runtime.host = state.owner_ph.clone();
        }
    }
    for (id, from, to) in &script.outages {
        engine.schedule.inject_failure(*id, from.secs(), to.secs());
    }
    engine.start_ticks(script.start.secs());
    for (at, kind, target) in &script.crashes {
        engine.push(
            at.secs(),
            SimEventKind::CrashInject {
                kind: kind.clone(),
                target: target.clone(),
            },
        );
    }
    for (at, ph) in &script.daemon_fails {
        engine.push(at.secs(), SimEventKind::DaemonFail { ph: ph.clone() });
    }
    match engine.run(script.end.secs(), StopWhen::Never)? {
        RunEnd::Stopped(_) | RunEnd::HorizonReached => {}
    }
    let recoveries = engine
        .recovered
        .iter()
        .map(|(vm, at)| {
            let crash = engine.crashes.get(vm).copied().unwrap_or(*at);
            (
                vm.clone(),
                Timestamp::from_secs(crash),
                Timestamp::from_secs(*at),
            )
        })
        .collect();
    Ok(ReplayOutcome {
        log: engine.log_text(),
        recoveries,
    })
}
