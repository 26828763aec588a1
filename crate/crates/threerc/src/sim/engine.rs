//! The event loop, trial runner, and campaign plumbing.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use thiserror::Error;

use crate::actions::{execute, vm_ip_for_index, ProfileNamespace};
use crate::cluster::{ClusterConfig, Load};
use crate::fsm::{
    controller_slot, tick, ActionKind, ControllerId, Flag, StageConfig, TickError, VmRecoveryState,
};
use crate::monitor::{MonitorSample, MonitorSnapshot, DEAD_PING};
use crate::placement::PlacementMode;
use crate::rng::{child_seed, TrialRng};
use crate::store::{ControllerState, MemStateStore, StateStore};
use crate::time::Timestamp;

use super::scenario::{CrashKind, CrashScenario, Measure, TimingModel};

/// Virtual-clock origin for campaigns: 2008-01-01/00:00:00. Trials start
/// here so that a VM with no recorded history (epoch timestamp) is far
/// beyond the clear-history horizon, exactly like a freshly crashed
/// production VM whose state file predates the crash by days.
pub const CAMPAIGN_BASE_SECS: i64 = 1_199_145_600;

/// Heartbeat age reported for live hosts in synthesized feeds.
const LIVE_PING: u32 = 15;

const TRIAL_HORIZON_SECS: i64 = 7 * 86_400;

/// Offset applied to a preset-reinstall target's last-action time, chosen
/// inside the flag-2 settling window (200 s) and the clear horizon (3600 s)
/// so the first reacting pass reinstalls immediately.
const PRESET_HISTORY_SECS: i64 = 300;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("scenario target `{0}` is not declared in the config")]
    UnknownTarget(String),
    #[error("scenario needs a virtual machine target, `{0}` is not one")]
    TargetNotVm(String),
    #[error("scenario needs a physical host target, `{0}` is not one")]
    TargetNotPh(String),
    #[error("destructive scenario target `{0}` is not reinstallable")]
    TargetNotReinstallable(String),
    #[error("config declares no suitable target host")]
    NoTarget,
    #[error("power-glitch target `{0}` hosts no virtual machines")]
    NoVictims(String),
    #[error("trial exceeded the simulation horizon without recovering")]
    Timeout,
    #[error("controller pass failed: {0}")]
    Tick(#[from] TickError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimEventKind {
    CrashInject {
        kind: CrashKind,
        target: String,
    },
    /// The monitor starts reporting the host dead.
    DeclareDead {
        host: String,
    },
    /// The monitor starts reporting the host alive again.
    DeclareAlive {
        host: String,
    },
    ControllerTick,
    ActionComplete {
        vm: String,
        revive: bool,
        repairs: bool,
    },
    DaemonFail {
        ph: String,
    },
}

/// A queued event. The queue pops in `(at, seq)` order, so simultaneous
/// events replay in insertion order.
#[derive(Debug, Clone)]
pub struct SimEvent {
    pub at: i64,
    pub seq: u64,
    pub kind: SimEventKind,
}

impl PartialEq for SimEvent {
    fn eq(&self, other: &Self) -> bool {
        (self.at, self.seq) == (other.at, other.seq)
    }
}

impl Eq for SimEvent {}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.at, self.seq).cmp(&(other.at, other.seq))
    }
}

#[derive(Debug, Clone)]
pub struct PhRuntime {
    pub up: bool,
    pub daemon_up: bool,
    pub load: Load,
    announcements: Vec<(i64, bool)>,
}

#[derive(Debug, Clone)]
pub struct VmRuntime {
    pub host: String,
    pub powered: bool,
    pub responsive: bool,
    pub boot_damaged: bool,
    pub reboot_responsive: bool,
    pub ip: std::net::Ipv4Addr,
    announcements: Vec<(i64, bool)>,
}

/// Runtime truth about the modeled cluster, as opposed to what the monitor
/// has announced so far.
#[derive(Debug, Clone)]
pub struct ClusterState {
    pub phs: BTreeMap<String, PhRuntime>,
    pub vms: BTreeMap<String, VmRuntime>,
}

impl ClusterState {
    pub fn from_config(config: &ClusterConfig) -> Self {
        let default_host = config
            .default_owner()
            .map(|ph| ph.name.clone())
            .unwrap_or_default();
        let phs = config
            .phs()
            .map(|ph| {
                (
                    ph.name.clone(),
                    PhRuntime {
                        up: true,
                        daemon_up: true,
                        load: Load::from_hundredths(0),
                        announcements: Vec::new(),
                    },
                )
            })
            .collect();
        let vms = config
            .vms()
            .enumerate()
            .map(|(idx, vm)| {
                (
                    vm.name.clone(),
                    VmRuntime {
                        host: default_host.clone(),
                        powered: true,
                        responsive: true,
                        boot_damaged: false,
                        reboot_responsive: true,
                        ip: vm_ip_for_index(idx),
                        announcements: Vec::new(),
                    },
                )
            })
            .collect();
        ClusterState { phs, vms }
    }

    pub fn ph_up(&self, name: &str) -> bool {
        self.phs.get(name).map(|p| p.up).unwrap_or(false)
    }

    /// Restores the hypervisor daemon on `ph` if it is down; returns the
    /// restore latency incurred (zero when it was already running).
    pub fn ensure_daemon(&mut self, ph: &str, timing: &TimingModel) -> i64 {
        match self.phs.get_mut(ph) {
            Some(p) if p.up && !p.daemon_up => {
                p.daemon_up = true;
                timing.daemon_restart
            }
            _ => 0,
        }
    }

    fn announce(&mut self, host: &str, at: i64, dead: bool) {
        if let Some(ph) = self.phs.get_mut(host) {
            ph.announcements.push((at, dead));
        } else if let Some(vm) = self.vms.get_mut(host) {
            vm.announcements.push((at, dead));
        }
    }

    fn announced_dead(announcements: &[(i64, bool)], at: i64) -> bool {
        announcements
            .iter()
            .rev()
            .find(|(t, _)| *t < at)
            .map(|(_, dead)| *dead)
            .unwrap_or(false)
    }
}

/// The alternating tick schedule plus any injected controller outages.
#[derive(Debug, Clone, Default)]
pub struct ControllerSchedule {
    outages: Vec<(ControllerId, i64, i64)>,
}

impl ControllerSchedule {
    /// Marks one controller dead over `[from, to)` virtual seconds. While
    /// it is down its minutes simply do not fire, doubling the observed
    /// period on the surviving controller.
    pub fn inject_failure(&mut self, id: ControllerId, from: i64, to: i64) {
        self.outages.push((id, from, to));
    }

    /// Which controller owns the minute containing `at`.
    pub fn owner_of(at: i64) -> ControllerId {
        if controller_slot(ControllerId::A, Timestamp::from_secs(at)) {
            ControllerId::A
        } else {
            ControllerId::B
        }
    }

    pub fn tick_runs(&self, at: i64) -> bool {
        let owner = Self::owner_of(at);
        !self
            .outages
            .iter()
            .any(|(id, from, to)| *id == owner && (*from..*to).contains(&at))
    }
}

/// One trial's event loop.
pub struct Engine<S: StateStore> {
    pub config: ClusterConfig,
    pub cluster: ClusterState,
    pub ctl: ControllerState<S>,
    pub stage: StageConfig,
    pub mode: PlacementMode,
    pub timing: TimingModel,
    pub rng: TrialRng,
    pub namespace: ProfileNamespace,
    pub schedule: ControllerSchedule,
    /// Seconds past each minute at which the controller pass runs (and
    /// stamps its log records).
    pub tick_offset: i64,
    /// Delay between a heartbeat resuming and the feed showing it.
    pub aliveness_lag: i64,
    queue: BinaryHeap<Reverse<SimEvent>>,
    seq: u64,
    pub log: Vec<String>,
    pub actions_taken: Vec<(i64, String, ActionKind)>,
    pub crashes: BTreeMap<String, i64>,
    pub detected: BTreeMap<String, i64>,
    pub recovered: BTreeMap<String, i64>,
    pub first_reaction: BTreeMap<String, i64>,
    pub tick_times: Vec<i64>,
}

pub enum StopWhen {
    Never,
    AllRecovered(Vec<String>),
    FirstReaction(String),
}

#[derive(Debug, PartialEq, Eq)]
pub enum RunEnd {
    Stopped(i64),
    HorizonReached,
}

impl<S: StateStore> Engine<S> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        config: ClusterConfig,
        store: S,
        stage: StageConfig,
        mode: PlacementMode,
        timing: TimingModel,
        rng: TrialRng,
        tick_offset: i64,
        aliveness_lag: i64,
    ) -> Self {
        let cluster = ClusterState::from_config(&config);
        Engine {
            config,
            cluster,
            ctl: ControllerState::new(store),
            stage,
            mode,
            timing,
            rng,
            namespace: ProfileNamespace::in_memory(),
            schedule: ControllerSchedule::default(),
            tick_offset,
            aliveness_lag,
            queue: BinaryHeap::new(),
            seq: 0,
            log: Vec::new(),
            actions_taken: Vec::new(),
            crashes: BTreeMap::new(),
            detected: BTreeMap::new(),
            recovered: BTreeMap::new(),
            first_reaction: BTreeMap::new(),
            tick_times: Vec::new(),
        }
    }

    pub fn push(&mut self, at: i64, kind: SimEventKind) {
        let seq = self.seq;
        self.seq += 1;
        self.queue.push(Reverse(SimEvent { at, seq, kind }));
    }

    /// Schedules the first controller pass at or after `from` on the
    /// 60-second grid shifted by `tick_offset`; passes then self-chain.
    pub fn start_ticks(&mut self, from: i64) {
        let first = from + (self.tick_offset - from).rem_euclid(60);
        self.push(first, SimEventKind::ControllerTick);
    }

    /// Feed the monitor would publish at `at`, declaration order.
    pub fn feed_snapshot(&self, at: i64) -> MonitorSnapshot {
        let mut samples = Vec::new();
        for host in self.config.hosts() {
            let name = host.name();
            let (load, dead) = if let Some(ph) = self.cluster.phs.get(name) {
                (ph.load, ClusterState::announced_dead(&ph.announcements, at))
            } else if let Some(vm) = self.cluster.vms.get(name) {
                (
                    Load::from_hundredths(0),
                    ClusterState::announced_dead(&vm.announcements, at),
                )
            } else {
                continue;
            };
            let ping = if dead { DEAD_PING } else { LIVE_PING };
            samples.push(MonitorSample::new(name, load, ping));
        }
        MonitorSnapshot::new(Timestamp::from_secs(at), samples)
    }

    fn apply_crash(&mut self, kind: &CrashKind, target: &str, at: i64) {
        let detection = self.timing.detection;
        match kind {
            CrashKind::SwitchOff => {
                if let Some(vm) = self.cluster.vms.get_mut(target) {
                    vm.powered = false;
                    vm.responsive = false;
                    vm.reboot_responsive = false;
                }
                self.crashes.entry(target.to_string()).or_insert(at);
                let dead_at = at + detection.draw(&mut self.rng);
                self.push(
                    dead_at,
                    SimEventKind::DeclareDead {
                        host: target.to_string(),
                    },
                );
            }
            CrashKind::LoadHang { reboot_responsive } => {
                if let Some(vm) = self.cluster.vms.get_mut(target) {
                    vm.powered = true;
                    vm.responsive = false;
                    vm.reboot_responsive = *reboot_responsive;
                }
                self.crashes.entry(target.to_string()).or_insert(at);
                let dead_at = at + detection.draw(&mut self.rng);
                self.push(
                    dead_at,
                    SimEventKind::DeclareDead {
                        host: target.to_string(),
                    },
                );
            }
            CrashKind::DestructiveBootErase => {
                if let Some(vm) = self.cluster.vms.get_mut(target) {
                    vm.powered = true;
                    vm.responsive = false;
                    vm.boot_damaged = true;
                    vm.reboot_responsive = false;
                }
                self.crashes.entry(target.to_string()).or_insert(at);
                let dead_at = at + detection.draw(&mut self.rng);
                self.push(
                    dead_at,
                    SimEventKind::DeclareDead {
                        host: target.to_string(),
                    },
                );
            }
            CrashKind::PhPowerGlitch => {
                if let Some(ph) = self.cluster.phs.get_mut(target) {
                    ph.up = false;
                    ph.daemon_up = false;
                }
                self.crashes.entry(target.to_string()).or_insert(at);
                let dead_at = at + detection.draw(&mut self.rng);
                self.push(
                    dead_at,
                    SimEventKind::DeclareDead {
                        host: target.to_string(),
                    },
                );
                let victims: Vec<String> = self
                    .cluster
                    .vms
                    .iter()
                    .filter(|(_, vm)| vm.host == target)
                    .map(|(name, _)| name.clone())
                    .collect();
                for victim in victims {
                    if let Some(vm) = self.cluster.vms.get_mut(&victim) {
                        vm.powered = false;
                        vm.responsive = false;
                        vm.reboot_responsive = false;
                    }
                    self.crashes.entry(victim.clone()).or_insert(at);
                    let dead_at = at + detection.draw(&mut self.rng);
                    self.push(dead_at, SimEventKind::DeclareDead { host: victim });
                }
            }
        }
    }

    fn controller_pass(&mut self, at: i64) -> Result<(), SimError> {
        self.tick_times.push(at);
        let now = Timestamp::from_secs(at);
        let snapshot = self.feed_snapshot(at);
        let entries = tick(
            now,
            &snapshot,
            &mut self.ctl,
            &self.config,
            &self.stage,
            self.mode,
        )?;
        for entry in entries {
            self.log.extend(entry.log_lines());
            self.first_reaction
                .entry(entry.action.vm.clone())
                .or_insert(at);
            let acting = !matches!(entry.action.kind, ActionKind::Wait | ActionKind::Clear);
            if acting {
                self.actions_taken
                    .push((at, entry.action.vm.clone(), entry.action.kind));
            }
            let spec = self.config.vm(&entry.action.vm);
            let scheduled = execute(
                &entry.action,
                spec,
                &mut self.cluster,
                &mut self.rng,
                &self.timing,
                &mut self.namespace,
            );
            for (when, kind) in scheduled {
                self.push(when, kind);
            }
        }
        Ok(())
    }

    fn complete_action(&mut self, vm_name: &str, revive: bool, repairs: bool, at: i64) {
        let Some(vm) = self.cluster.vms.get_mut(vm_name) else {
            return;
        };
        if repairs {
            vm.boot_damaged = false;
        }
        if revive && !vm.boot_damaged {
            vm.responsive = true;
            vm.powered = true;
            self.recovered.entry(vm_name.to_string()).or_insert(at);
            let lag = self.aliveness_lag;
            self.push(
                at + lag,
                SimEventKind::DeclareAlive {
                    host: vm_name.to_string(),
                },
            );
        }
    }

    pub fn run(&mut self, horizon: i64, stop: StopWhen) -> Result<RunEnd, SimError> {
        while let Some(Reverse(event)) = self.queue.pop() {
            if event.at > horizon {
                return Ok(RunEnd::HorizonReached);
            }
            match &event.kind {
                SimEventKind::CrashInject { kind, target } => {
                    let (kind, target) = (kind.clone(), target.clone());
                    self.apply_crash(&kind, &target, event.at);
                }
                SimEventKind::DeclareDead { host } => {
                    let host = host.clone();
                    self.cluster.announce(&host, event.at, true);
                    self.detected.entry(host).or_insert(event.at);
                }
                SimEventKind::DeclareAlive { host } => {
                    let host = host.clone();
                    self.cluster.announce(&host, event.at, false);
                }
                SimEventKind::DaemonFail { ph } => {
                    if let Some(p) = self.cluster.phs.get_mut(ph.as_str()) {
                        p.daemon_up = false;
                    }
                }
                SimEventKind::ControllerTick => {
                    let next = event.at + 60;
                    if self.schedule.tick_runs(event.at) {
                        self.controller_pass(event.at)?;
                    }
                    self.push(next, SimEventKind::ControllerTick);
                }
                SimEventKind::ActionComplete {
                    vm,
                    revive,
                    repairs,
                } => {
                    let (vm, revive, repairs) = (vm.clone(), *revive, *repairs);
                    self.complete_action(&vm, revive, repairs, event.at);
                }
            }
            match &stop {
                StopWhen::Never => {}
                StopWhen::AllRecovered(victims) => {
                    if victims.iter().all(|v| self.recovered.contains_key(v)) {
                        return Ok(RunEnd::Stopped(event.at));
                    }
                }
                StopWhen::FirstReaction(vm) => {
                    if self.first_reaction.contains_key(vm) {
                        return Ok(RunEnd::Stopped(event.at));
                    }
                }
            }
        }
        Ok(RunEnd::HorizonReached)
    }

    pub fn log_text(&self) -> String {
        if self.log.is_empty() {
            String::new()
        } else {
            format!("{}\n", self.log.join("\n"))
        }
    }
}

/// Outcome of a replayed script: the controller log plus per-VM recovery
/// instants, both in virtual time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayOutcome {
    pub log: String,
    pub recoveries: Vec<(String, Timestamp, Timestamp)>,
}

/// One measured trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoverySample {
    pub trial: u64,
    /// Seconds from trial start, like the other instants.
    pub crash_at: i64,
    pub detected_at: i64,
    pub recovered_at: i64,
    pub recovery_time: i64,
    pub action_path: Vec<String>,
}

fn resolve_target(config: &ClusterConfig, scenario: &CrashScenario) -> Result<String, SimError> {
    let wants_ph = matches!(scenario.kind, CrashKind::PhPowerGlitch);
    if let Some(name) = &scenario.target {
        if config.get(name).is_none() {
            return Err(SimError::UnknownTarget(name.clone()));
        }
        match (wants_ph, config.ph(name).is_some()) {
            (true, false) => return Err(SimError::TargetNotPh(name.clone())),
            (false, true) => return Err(SimError::TargetNotVm(name.clone())),
            _ => {}
        }
        Ok(name.clone())
    } else if wants_ph {
        config
            .phs()
            .next()
            .map(|ph| ph.name.clone())
            .ok_or(SimError::NoTarget)
    } else {
        config
            .vms()
            .next()
            .map(|vm| vm.name.clone())
            .ok_or(SimError::NoTarget)
    }
}

/// Runs one seeded trial: injects the crash, lets the monitor declare the
/// host dead after the detection latency, runs controller passes on the
/// minute grid, and measures recovery (or awareness). Fully deterministic
/// for a given `(config, scenario, timing, seed)`.
pub fn run_trial(
    config: &ClusterConfig,
    scenario: &CrashScenario,
    timing: &TimingModel,
    mode: PlacementMode,
    seed: u64,
) -> Result<RecoverySample, SimError> {
    let target = resolve_target(config, scenario)?;
    if scenario.preset_reinstall {
        match config.vm(&target) {
            Some(vm) if vm.reinstallable => {}
            Some(_) => return Err(SimError::TargetNotReinstallable(target)),
            None => return Err(SimError::TargetNotVm(target)),
        }
    }
    let mut rng = TrialRng::new(seed);
    let base = CAMPAIGN_BASE_SECS;
    // The crash lands uniformly inside the controller minute.
    let crash_at = base + rng.uniform_secs(0, 60);
    let aliveness_lag = timing.detection.base;
    let mut engine = Engine::new(
        config.clone(),
        MemStateStore::new(),
        scenario.stage.clone(),
        mode,
        timing.clone(),
        rng,
        0,
        aliveness_lag,
    );
    if scenario.preset_reinstall {
        let owner = config
            .default_owner()
            .map(|ph| ph.name.clone())
            .ok_or(SimError::NoTarget)?;
        engine
            .ctl
            .write(
                &target,
                &VmRecoveryState {
                    owner_ph: owner,
                    last_action_at: Timestamp::from_secs(crash_at - PRESET_HISTORY_SECS),
                    flag: Flag::RestartIssued,
                },
                1,
            )
            .map_err(|e| SimError::Tick(TickError::Store(e.to_string())))?;
    }
    let victims: Vec<String> = match &scenario.kind {
        CrashKind::PhPowerGlitch => {
            let hosted: Vec<String> = engine
                .cluster
                .vms
                .iter()
                .filter(|(_, vm)| vm.host == target)
                .map(|(name, _)| name.clone())
                .collect();
            if hosted.is_empty() {
                return Err(SimError::NoVictims(target));
            }
            hosted
        }
        _ => vec![target.clone()],
    };
    engine.start_ticks(base);
    engine.push(
        crash_at,
        SimEventKind::CrashInject {
            kind: scenario.kind.clone(),
            target: target.clone(),
        },
    );
    let stop = match scenario.measure {
        Measure::Recovery => StopWhen::AllRecovered(victims.clone()),
        Measure::Awareness => StopWhen::FirstReaction(target.clone()),
    };
    let end = engine.run(base + TRIAL_HORIZON_SECS, stop)?;
    let stopped_at = match end {
        RunEnd::Stopped(at) => at,
        RunEnd::HorizonReached => return Err(SimError::Timeout),
    };
    let detected_at = *engine.detected.get(&target).unwrap_or(&stopped_at);
    let recovered_at = match scenario.measure {
        Measure::Recovery => victims
            .iter()
            .filter_map(|v| engine.recovered.get(v))
            .copied()
            .max()
            .unwrap_or(stopped_at),
        Measure::Awareness => *engine.first_reaction.get(&target).unwrap_or(&stopped_at),
    };
    // An awareness sample measures crash-to-reaction only; whatever the
    // reacting pass went on to do is not part of the measurement.
    let action_path = match scenario.measure {
        Measure::Recovery => engine
            .actions_taken
            .iter()
            .map(|(_, _, kind)| kind.token().to_string())
            .collect(),
        Measure::Awareness => Vec::new(),
    };
    Ok(RecoverySample {
        trial: 0,
        crash_at: crash_at - base,
        detected_at: detected_at - base,
        recovered_at: recovered_at - base,
        recovery_time: recovered_at - crash_at,
        action_path,
    })
}

/// Runs `trials` independent trials; trial `i` is keyed by an injective
/// child seed of `(seed, i)`, and the output is ordered by trial index.
pub fn run_campaign(
    config: &ClusterConfig,
    scenario: &CrashScenario,
    timing: &TimingModel,
    mode: PlacementMode,
    trials: u64,
    seed: u64,
) -> Result<Vec<RecoverySample>, SimError> {
    let mut samples = Vec::with_capacity(trials as usize);
    for trial in 0..trials {
        let mut sample = run_trial(config, scenario, timing, mode, child_seed(seed, trial))?;
        sample.trial = trial;
        samples.push(sample);
    }
    Ok(samples)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CsvError {
    #[error("missing campaign header line")]
    Header,
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CampaignMeta {
    pub scenario: String,
    pub seed: Option<u64>,
}

pub const CSV_HEADER: &str = "trial,crash_at,detected_at,recovered_at,recovery_time,action_path";

/// Renders a campaign as CSV: a `# scenario=...` comment, the fixed header,
/// one row per trial with `|`-joined action paths.
pub fn campaign_to_csv(samples: &[RecoverySample], scenario: &str, seed: u64) -> String {
    let mut out = format!(
        "# scenario={scenario} seed={seed} trials={}\n{CSV_HEADER}\n",
        samples.len()
    );
    for s in samples {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.trial,
            s.crash_at,
            s.detected_at,
            s.recovered_at,
            s.recovery_time,
            s.action_path.join("|")
        ));
    }
    out
}

#[allow(clippy::type_complexity)]
pub fn parse_campaign_csv(text: &str) -> Result<(CampaignMeta, Vec<RecoverySample>), CsvError> {
    let mut meta = CampaignMeta::default();
    let mut samples = Vec::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let row = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            for kv in comment.split_whitespace() {
                match kv.split_once('=') {
                    Some(("scenario", v)) => meta.scenario = v.to_string(),
                    Some(("seed", v)) => meta.seed = v.parse().ok(),
                    _ => {}
                }
            }
            continue;
        }
        if !saw_header {
            if line != CSV_HEADER {
                return Err(CsvError::Header);
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(CsvError::Row {
                row,
                msg: format!("expected 6 fields, got {}", fields.len()),
            });
        }
        let int = |i: usize, what: &str| -> Result<i64, CsvError> {
            fields[i].parse().map_err(|_| CsvError::Row {
                row,
                msg: format!("bad {what} `{}`", fields[i]),
            })
        };
        samples.push(RecoverySample {
            trial: int(0, "trial")? as u64,
            crash_at: int(1, "crash_at")?,
            detected_at: int(2, "detected_at")?,
            recovered_at: int(3, "recovered_at")?,
            recovery_time: int(4, "recovery_time")?,
            action_path: if fields[5].is_empty() {
                Vec::new()
            } else {
                fields[5].split('|').map(str::to_string).collect()
            },
        });
    }
    if !saw_header {
        return Err(CsvError::Header);
    }
    Ok((meta, samples))
}
