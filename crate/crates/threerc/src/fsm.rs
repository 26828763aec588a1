//! The recovery controller: a finite state machine with hysteresis.
//!
//! Each dead virtual machine carries a persisted flag recording what was
//! already tried. Every controller pass either waits (the previous action
//! is still inside its settling window), clears stale history, or escalates
//! to the next intervention level:
//!
//! ```text
//! flag 0 -> REBOOT    (flag := 1), settle 600 s beforehand
//! flag 1 -> RESTART   (flag := 2), settle 200 s beforehand
//! flag 2 -> REINSTALL (flag := 0), settle 200 s beforehand; VMs not
//!           marked reinstallable just reset the flag instead
//! ```
//!
//! History older than one hour is cleared before acting, so a fresh crash
//! always starts from the top of the ladder.

use std::fmt;

use thiserror::Error;

use crate::cluster::{ClusterConfig, VmSpec};
use crate::monitor::{HostStatusView, MonitorSnapshot};
use crate::placement::{choose_host, PlacementDecision, PlacementError, PlacementMode};
use crate::store::{ControllerState, StateStore};
use crate::time::Timestamp;

/// Seconds of silence after which a VM's action history is cleared.
pub const CLEAR_AFTER_SECS: i64 = 3600;

/// Hours in the (non-leap) year used for downtime arithmetic.
pub const HOURS_PER_YEAR: f64 = 8760.0;

#[derive(Debug, Error, PartialEq)]
pub enum FsmError {
    #[error("invalid flag value {0}")]
    InvalidFlag(u8),
    #[error("mean time between failures must be positive")]
    NonPositiveMtbf,
    #[error("mean time to repair must be non-negative")]
    NegativeMttr,
    #[error("availability ratio {0} outside (0, 1]")]
    RatioOutOfRange(f64),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TickError {
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error(transparent)]
    Feed(#[from] crate::monitor::FeedError),
    #[error("config declares VMs but no physical host")]
    NoPhysicalHost,
    #[error("state store write failed: {0}")]
    Store(String),
}

/// Persisted escalation state of one virtual machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Flag {
    /// Cleared: nothing pending, or a reinstall was the last action.
    #[default]
    Cleared,
    RebootIssued,
    RestartIssued,
}

impl Flag {
    pub fn from_u8(v: u8) -> Option<Flag> {
        match v {
            0 => Some(Flag::Cleared),
            1 => Some(Flag::RebootIssued),
            2 => Some(Flag::RestartIssued),
            _ => None,
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Flag::Cleared => 0,
            Flag::RebootIssued => 1,
            Flag::RestartIssued => 2,
        }
    }
}

/// One VM's persisted state: owning physical host, last action instant,
/// escalation flag. Serialized as `PH TIMESTAMP FLAG` (see [`crate::store`]).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VmRecoveryState {
    pub owner_ph: String,
    pub last_action_at: Timestamp,
    pub flag: Flag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionKind {
    Wait,
    Clear,
    Reboot,
    Restart,
    Reinstall,
    /// The flag-2 step for a VM that may not be reinstalled: the flag
    /// resets to 0 and nothing is executed. Logged with the `ACT` token.
    NoopEscalate,
}

impl ActionKind {
    /// Token written in the log record's action column.
    pub fn token(self) -> &'static str {
        match self {
            ActionKind::Wait => "..wait",
            ActionKind::Clear => "CLEAR",
            ActionKind::Reboot => "REBOOT",
            ActionKind::Restart => "RESTART",
            ActionKind::Reinstall => "REINSTALL",
            ActionKind::NoopEscalate => "ACT",
        }
    }
}

/// A decision the controller took for one VM on one pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveryAction {
    pub kind: ActionKind,
    pub vm: String,
    pub from_ph: String,
    pub to_ph: String,
    pub issued_at: Timestamp,
}

impl RecoveryAction {
    /// Banner line written above the log record, when the action has one.
    pub fn banner(&self) -> Option<String> {
        match self.kind {
            ActionKind::Clear => Some(">> Clear history".to_string()),
            ActionKind::Reboot => Some(format!(">> REBOOT VM {} on PH {}", self.vm, self.to_ph)),
            ActionKind::Restart => Some(format!(
                ">> RESTART VM {} on PH {} [from OLD PH {}]",
                self.vm, self.to_ph, self.from_ph
            )),
            ActionKind::Reinstall => Some(format!(
                ">> REINSTALL VM {} on PH {} [from OLD PH {}]",
                self.vm, self.to_ph, self.from_ph
            )),
            ActionKind::Wait | ActionKind::NoopEscalate => None,
        }
    }
}

/// One line of the controller log:
/// `YYYY-MM-DD/HH:MM:SS -- VM - PH1 PH2 - YYYY-MM-DD/HH:MM:SS [F] ACT`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogRecord {
    pub now: Timestamp,
    pub vm: String,
    pub ph1: String,
    pub ph2: String,
    pub last_action_at: Timestamp,
    pub flag: Flag,
    pub act: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LogParseError {
    #[error("malformed log record `{0}`")]
    Layout(String),
    #[error("bad timestamp in log record: {0}")]
    Time(#[from] crate::time::TimeError),
    #[error("bad flag field `{0}` in log record")]
    Flag(String),
}

pub fn format_log_record(record: &LogRecord) -> String {
    format!(
        "{} -- {} - {} {} - {} [{}] {}",
        record.now,
        record.vm,
        record.ph1,
        record.ph2,
        record.last_action_at,
        record.flag.as_u8(),
        record.act
    )
}

pub fn parse_log_record(line: &str) -> Result<LogRecord, LogParseError> {
    let layout = || LogParseError::Layout(line.to_string());
    let fields: Vec<&str> = line.split(' ').collect();
    if fields.len() != 10
        || fields[1] != "--"
        || fields[3] != "-"
        || fields[6] != "-"
        || fields.iter().any(|f| f.is_empty())
    {
        return Err(layout());
    }
    let now: Timestamp = fields[0].parse()?;
    let last_action_at: Timestamp = fields[7].parse()?;
    let flag_field = fields[8];
    let flag = flag_field
        .strip_prefix('[')
        .and_then(|f| f.strip_suffix(']'))
        .and_then(|f| f.parse::<u8>().ok())
        .and_then(Flag::from_u8)
        .ok_or_else(|| LogParseError::Flag(flag_field.to_string()))?;
    Ok(LogRecord {
        now,
        vm: fields[2].to_string(),
        ph1: fields[4].to_string(),
        ph2: fields[5].to_string(),
        last_action_at,
        flag,
        act: fields[9].to_string(),
    })
}

/// Tunable escalation schedule: which stages run, how many times each
/// repeats, and how long each flag's settling window lasts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageConfig {
    pub reboot_enabled: bool,
    pub reboot_cycles: u32,
    pub restart_cycles: u32,
    /// Settling windows, seconds, indexed by flag value.
    pub wait_secs: [i64; 3],
}

impl Default for StageConfig {
    fn default() -> Self {
        StageConfig {
            reboot_enabled: true,
            reboot_cycles: 1,
            restart_cycles: 1,
            wait_secs: [600, 200, 200],
        }
    }
}

impl StageConfig {
    pub fn wait_for(&self, flag: Flag) -> i64 {
        self.wait_secs[flag.as_u8() as usize]
    }

    /// Parses the `key=value` stage file. Unknown keys are rejected.
    pub fn parse(text: &str) -> Result<StageConfig, String> {
        let mut cfg = StageConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value", idx + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| format!("line {}: bad {what} `{value}`", idx + 1);
            match key {
                "reboot_enabled" => {
                    cfg.reboot_enabled = value.parse().map_err(|_| bad("bool"))?;
                }
                "cycles_reboot" => {
                    cfg.reboot_cycles = value.parse().map_err(|_| bad("count"))?;
                }
                "cycles_restart" => {
                    cfg.restart_cycles = value.parse().map_err(|_| bad("count"))?;
                }
                "wait_flag0" => cfg.wait_secs[0] = value.parse().map_err(|_| bad("seconds"))?,
                "wait_flag1" => cfg.wait_secs[1] = value.parse().map_err(|_| bad("seconds"))?,
                "wait_flag2" => cfg.wait_secs[2] = value.parse().map_err(|_| bad("seconds"))?,
                other => return Err(format!("line {}: unknown key `{other}`", idx + 1)),
            }
            if cfg.reboot_cycles == 0 || cfg.restart_cycles == 0 {
                return Err(format!("line {}: cycle counts must be >= 1", idx + 1));
            }
        }
        Ok(cfg)
    }
}

/// Settling window after the action recorded by `flag`: how long the
/// controller waits before taking the next step.
pub fn restart_time_for(flag: Flag) -> i64 {
    match flag {
        Flag::Cleared => 600,       // after reinstall or clear
        Flag::RebootIssued => 200,  // after reboot
        Flag::RestartIssued => 200, // after restart
    }
}

/// True when the VM has been quiet long enough that its history is stale.
pub fn should_clear_history(delta_t: i64) -> bool {
    delta_t >= CLEAR_AFTER_SECS
}

/// Escalation chosen by [`next_action`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Escalation {
    pub kind: ActionKind,
    pub new_flag: Flag,
    pub new_repeats: u32,
}

/// Picks the next intervention for a dead VM whose settling window has
/// elapsed. `repeats` counts how many times the current flag's action has
/// already been issued (volatile; only meaningful with cycle counts > 1).
pub fn next_action(flag: Flag, repeats: u32, vm: &VmSpec, stage: &StageConfig) -> Escalation {
    match flag {
        Flag::Cleared => {
            if stage.reboot_enabled {
                Escalation {
                    kind: ActionKind::Reboot,
                    new_flag: Flag::RebootIssued,
                    new_repeats: 1,
                }
            } else {
                Escalation {
                    kind: ActionKind::Restart,
                    new_flag: Flag::RestartIssued,
                    new_repeats: 1,
                }
            }
        }
        Flag::RebootIssued => {
            if repeats < stage.reboot_cycles {
                Escalation {
                    kind: ActionKind::Reboot,
                    new_flag: Flag::RebootIssued,
                    new_repeats: repeats + 1,
                }
            } else {
                Escalation {
                    kind: ActionKind::Restart,
                    new_flag: Flag::RestartIssued,
                    new_repeats: 1,
                }
            }
        }
        Flag::RestartIssued => {
            if repeats < stage.restart_cycles {
                Escalation {
                    kind: ActionKind::Restart,
                    new_flag: Flag::RestartIssued,
                    new_repeats: repeats + 1,
                }
            } else if vm.reinstallable {
                Escalation {
                    kind: ActionKind::Reinstall,
                    new_flag: Flag::Cleared,
                    new_repeats: 0,
                }
            } else {
                Escalation {
                    kind: ActionKind::NoopEscalate,
                    new_flag: Flag::Cleared,
                    new_repeats: 0,
                }
            }
        }
    }
}

/// One controller decision plus its log record. `Clear` entries carry only
/// a banner, no timestamped record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TickEntry {
    pub action: RecoveryAction,
    pub record: Option<LogRecord>,
}

impl TickEntry {
    /// Log text for this entry: optional banner line plus record line.
    pub fn log_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        if let Some(banner) = self.action.banner() {
            lines.push(banner);
        }
        if let Some(record) = &self.record {
            lines.push(format_log_record(record));
        }
        lines
    }
}

/// One controller pass over the cluster.
///
/// For every dead VM (feed order, synthesized-dead config hosts last) the
/// pass emits a wait record while the settling window is open, otherwise
/// clears stale history and escalates, persisting the new state. Live VMs
/// produce nothing. The result is a pure function of the inputs.
pub fn tick<S: StateStore>(
    now: Timestamp,
    snapshot: &MonitorSnapshot,
    ctl: &mut ControllerState<S>,
    config: &ClusterConfig,
    stage: &StageConfig,
    mode: PlacementMode,
) -> Result<Vec<TickEntry>, TickError> {
    let view = HostStatusView::resolve(snapshot, config)?;
    let dead_vms: Vec<String> = view
        .dead_hosts()
        .filter(|name| config.vm(name).is_some())
        .map(str::to_string)
        .collect();
    let mut entries = Vec::new();
    for vm_name in dead_vms {
        let vm_spec = config.vm(&vm_name).expect("filtered to VMs");
        let (state, repeats) = ctl.read(&vm_name).unwrap_or((
            VmRecoveryState {
                owner_ph: config
                    .default_owner()
                    .ok_or(TickError::NoPhysicalHost)?
                    .name
                    .clone(),
                last_action_at: Timestamp::EPOCH,
                flag: Flag::Cleared,
            },
            0,
        ));
        let delta_t = (now.secs() - state.last_action_at.secs()).max(0);
        let wait_record = |kind: ActionKind| TickEntry {
            action: RecoveryAction {
                kind,
                vm: vm_name.clone(),
                from_ph: state.owner_ph.clone(),
                to_ph: state.owner_ph.clone(),
                issued_at: now,
            },
            record: Some(LogRecord {
                now,
                vm: vm_name.clone(),
                ph1: state.owner_ph.clone(),
                ph2: state.owner_ph.clone(),
                last_action_at: state.last_action_at,
                flag: state.flag,
                act: ActionKind::Wait.token().to_string(),
            }),
        };
        if delta_t <= stage.wait_for(state.flag) {
            entries.push(wait_record(ActionKind::Wait));
            continue;
        }
        let clearing = should_clear_history(delta_t);
        let (flag, repeats) = if clearing {
            (Flag::Cleared, 0)
        } else {
            (state.flag, repeats)
        };
        let escalation = next_action(flag, repeats, vm_spec, stage);
        // A reboot is delivered to the guest on its current host and needs
        // no capacity; everything else must be placed first.
        let target_ph = match escalation.kind {
            ActionKind::Reboot => state.owner_ph.clone(),
            _ => {
                let counts = ctl.vm_count_by_ph();
                match choose_host(&vm_name, &state.owner_ph, &view, config, &counts, mode)? {
                    PlacementDecision::SamePh(ph) | PlacementDecision::MovedPh(ph) => ph,
                    PlacementDecision::WaitNoCapacity => {
                        // No host can take the VM: keep waiting, touch nothing.
                        entries.push(wait_record(ActionKind::Wait));
                        continue;
                    }
                }
            }
        };
        if clearing {
            entries.push(TickEntry {
                action: RecoveryAction {
                    kind: ActionKind::Clear,
                    vm: vm_name.clone(),
                    from_ph: state.owner_ph.clone(),
                    to_ph: state.owner_ph.clone(),
                    issued_at: now,
                },
                record: None,
            });
        }
        let action = RecoveryAction {
            kind: escalation.kind,
            vm: vm_name.clone(),
            from_ph: state.owner_ph.clone(),
            to_ph: target_ph.clone(),
            issued_at: now,
        };
        let record = LogRecord {
            now,
            vm: vm_name.clone(),
            ph1: state.owner_ph.clone(),
            ph2: target_ph.clone(),
            last_action_at: state.last_action_at,
            flag: escalation.new_flag,
            act: escalation.kind.token().to_string(),
        };
        ctl.write(
            &vm_name,
            &VmRecoveryState {
                owner_ph: target_ph,
                last_action_at: now,
                flag: escalation.new_flag,
            },
            escalation.new_repeats,
        )
        .map_err(|e| TickError::Store(e.to_string()))?;
        entries.push(TickEntry {
            action,
            record: Some(record),
        });
    }
    Ok(entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerId {
    A,
    B,
}

impl fmt::Display for ControllerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControllerId::A => "A",
            ControllerId::B => "B",
        })
    }
}

/// Dual-controller schedule: A owns the even minutes, B the odd ones, so
/// exactly one controller acts per minute without any coordination.
pub fn controller_slot(id: ControllerId, now: Timestamp) -> bool {
    let even = now.minute_index().rem_euclid(2) == 0;
    match id {
        ControllerId::A => even,
        ControllerId::B => !even,
    }
}

/// `MTBF / (MTBF + MTTR)`, both in hours.
pub fn availability(mtbf_hours: f64, mttr_hours: f64) -> Result<f64, FsmError> {
    if mtbf_hours <= 0.0 || mtbf_hours.is_nan() {
        return Err(FsmError::NonPositiveMtbf);
    }
    if mttr_hours < 0.0 || mttr_hours.is_nan() {
        return Err(FsmError::NegativeMttr);
    }
    Ok(mtbf_hours / (mtbf_hours + mttr_hours))
}

/// Hours of downtime per year implied by an availability ratio.
pub fn downtime_per_year(ratio: f64) -> Result<f64, FsmError> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(FsmError::RatioOutOfRange(ratio));
    }
    Ok((1.0 - ratio) * HOURS_PER_YEAR)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::parse_hosts_def;
    use crate::monitor::parse_status_feed;
    use crate::store::MemStateStore;

    fn vm_spec(reinstallable: bool) -> VmSpec {
        VmSpec {
            name: "vrt1".into(),
            reinstallable,
            os_profile: Some("sl4-32".into()),
            middleware: None,
        }
    }

    #[test]
    fn settle_windows_match_flags() {
        assert_eq!(restart_time_for(Flag::RebootIssued), 200);
        assert_eq!(restart_time_for(Flag::RestartIssued), 200);
        assert_eq!(restart_time_for(Flag::Cleared), 600);
    }

    #[test]
    fn clear_boundary_is_one_hour_inclusive() {
        assert!(should_clear_history(3600));
        assert!(!should_clear_history(3599));
        assert!(!should_clear_history(0));
    }

    #[test]
    fn escalation_ladder_default_config() {
        let stage = StageConfig::default();
        let e = next_action(Flag::Cleared, 0, &vm_spec(true), &stage);
        assert_eq!(
            (e.kind, e.new_flag),
            (ActionKind::Reboot, Flag::RebootIssued)
        );
        let e = next_action(Flag::RebootIssued, 1, &vm_spec(true), &stage);
        assert_eq!(
            (e.kind, e.new_flag),
            (ActionKind::Restart, Flag::RestartIssued)
        );
        let e = next_action(Flag::RestartIssued, 1, &vm_spec(true), &stage);
        assert_eq!((e.kind, e.new_flag), (ActionKind::Reinstall, Flag::Cleared));
        let e = next_action(Flag::RestartIssued, 1, &vm_spec(false), &stage);
        assert_eq!(
            (e.kind, e.new_flag),
            (ActionKind::NoopEscalate, Flag::Cleared)
        );
    }

    #[test]
    fn escalation_with_reboot_disabled_starts_at_restart() {
        let stage = StageConfig {
            reboot_enabled: false,
            ..StageConfig::default()
        };
        let e = next_action(Flag::Cleared, 0, &vm_spec(true), &stage);
        assert_eq!(
            (e.kind, e.new_flag),
            (ActionKind::Restart, Flag::RestartIssued)
        );
    }

    #[test]
    fn escalation_repeats_stages_with_cycles() {
        let stage = StageConfig {
            restart_cycles: 2,
            ..StageConfig::default()
        };
        let e = next_action(Flag::RestartIssued, 1, &vm_spec(true), &stage);
        assert_eq!(e.kind, ActionKind::Restart);
        assert_eq!(e.new_repeats, 2);
        let e = next_action(Flag::RestartIssued, 2, &vm_spec(true), &stage);
        assert_eq!(e.kind, ActionKind::Reinstall);
    }

    #[test]
    fn stage_config_parses_key_values() {
        let cfg = StageConfig::parse(
            "reboot_enabled = false\ncycles_restart = 3\nwait_flag0 = 300\n# note\n",
        )
        .unwrap();
        assert!(!cfg.reboot_enabled);
        assert_eq!(cfg.restart_cycles, 3);
        assert_eq!(cfg.wait_secs, [300, 200, 200]);
        assert!(StageConfig::parse("cycles_reboot = 0\n").is_err());
        assert!(StageConfig::parse("nope = 1\n").is_err());
    }

    #[test]
    fn log_record_formats_the_documented_layout() {
        let rec = LogRecord {
            now: "2008-12-14/04:31:01".parse().unwrap(),
            vm: "gridce".into(),
            ph1: "alfa01".into(),
            ph2: "alfa01".into(),
            last_action_at: "2008-12-13/13:12:01".parse().unwrap(),
            flag: Flag::RebootIssued,
            act: "REBOOT".into(),
        };
        assert_eq!(
            format_log_record(&rec),
            "2008-12-14/04:31:01 -- gridce - alfa01 alfa01 - 2008-12-13/13:12:01 [1] REBOOT"
        );
    }

    #[test]
    fn log_record_parses_published_lines() {
        let restart = parse_log_record(
            "2008-12-14/04:35:01 -- gridce - alfa01 alfa04 - 2008-12-14/04:31:01 [2] RESTART",
        )
        .unwrap();
        assert_eq!(restart.ph2, "alfa04");
        assert_eq!(restart.flag, Flag::RestartIssued);
        let wait = parse_log_record(
            "2008-12-14/04:32:01 -- gridce - alfa01 alfa01 - 2008-12-14/04:31:01 [1] ..wait",
        )
        .unwrap();
        assert_eq!(wait.act, "..wait");
        assert_eq!(parse_log_record(&format_log_record(&wait)).unwrap(), wait);
    }

    #[test]
    fn log_record_rejects_malformed_lines() {
        for bad in [
            "",
            "2008-12-14/04:31:01 -- gridce - alfa01 alfa01 - 2008-12-13/13:12:01 [7] REBOOT",
            "2008-12-14/04:31:01 -- gridce - alfa01 - 2008-12-13/13:12:01 [1] REBOOT",
            "2008-12-14/04:31:01 gridce - alfa01 alfa01 - 2008-12-13/13:12:01 [1] REBOOT",
            "2008-12-14/04:31:01 -- gridce - alfa01 alfa01 - 2008-12-13/13:12:01 [1] a b",
        ] {
            assert!(parse_log_record(bad).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn controller_slots_alternate_by_minute() {
        let minute4 = Timestamp::from_secs(4 * 60);
        assert!(controller_slot(ControllerId::A, minute4));
        assert!(!controller_slot(ControllerId::B, minute4));
        for m in 0..10_080i64 {
            let t = Timestamp::from_secs(m * 60 + 1);
            assert!(
                controller_slot(ControllerId::A, t) ^ controller_slot(ControllerId::B, t),
                "minute {m}"
            );
        }
    }

    #[test]
    fn availability_arithmetic() {
        assert!((availability(999.0, 1.0).unwrap() - 0.999).abs() < 1e-12);
        assert_eq!(availability(10.0, 0.0).unwrap(), 1.0);
        assert!((downtime_per_year(0.999).unwrap() - 8.76).abs() < 1e-9);
        assert!(availability(0.0, 1.0).is_err());
        assert!(downtime_per_year(0.0).is_err());
        assert!(downtime_per_year(1.1).is_err());
    }

    // --- tick behavior ---------------------------------------------------

    fn fixture() -> (ClusterConfig, ControllerState<MemStateStore>) {
        let config =
            parse_hosts_def("PH alfa01 10\nPH alfa02 10\nVM vrt1 1 sl4-32 ig_CE\n").unwrap();
        (config, ControllerState::new(MemStateStore::new()))
    }

    fn snapshot_at(now: Timestamp, feed: &str) -> MonitorSnapshot {
        parse_status_feed(feed, now).unwrap()
    }

    #[test]
    fn all_alive_emits_nothing() {
        let (config, mut ctl) = fixture();
        let now: Timestamp = "2008-06-01/12:00:00".parse().unwrap();
        let snap = snapshot_at(now, "alfa01;0.10;5;\nalfa02;0.10;5;\nvrt1;0.00;9;\n");
        let out = tick(
            now,
            &snap,
            &mut ctl,
            &config,
            &StageConfig::default(),
            PlacementMode::MinLoad,
        )
        .unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn dead_vm_with_stale_history_clears_then_reboots() {
        let (config, mut ctl) = fixture();
        ctl.write(
            "vrt1",
            &VmRecoveryState {
                owner_ph: "alfa01".into(),
                last_action_at: "2008-06-01/10:00:00".parse().unwrap(),
                flag: Flag::RebootIssued,
            },
            1,
        )
        .unwrap();
        let now: Timestamp = "2008-06-01/12:00:00".parse().unwrap();
        let snap = snapshot_at(now, "alfa01;0.10;5;\nalfa02;0.10;5;\nvrt1;0.00;9999;\n");
        let out = tick(
            now,
            &snap,
            &mut ctl,
            &config,
            &StageConfig::default(),
            PlacementMode::MinLoad,
        )
        .unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].action.kind, ActionKind::Clear);
        assert_eq!(out[0].record, None);
        assert_eq!(out[1].action.kind, ActionKind::Reboot);
        let rec = out[1].record.as_ref().unwrap();
        assert_eq!(rec.flag, Flag::RebootIssued);
        assert_eq!((rec.ph1.as_str(), rec.ph2.as_str()), ("alfa01", "alfa01"));
        let (state, _) = ctl.read("vrt1").unwrap();
        assert_eq!(state.flag, Flag::RebootIssued);
        assert_eq!(state.last_action_at, now);
    }

    #[test]
    fn recent_history_reboots_without_clearing() {
        let (config, mut ctl) = fixture();
        ctl.write(
            "vrt1",
            &VmRecoveryState {
                owner_ph: "alfa01".into(),
                last_action_at: "2008-06-01/11:48:00".parse().unwrap(),
                flag: Flag::Cleared,
            },
            0,
        )
        .unwrap();
        let now: Timestamp = "2008-06-01/12:00:00".parse().unwrap(); // delta 720
        let snap = snapshot_at(now, "alfa01;0.10;5;\nalfa02;0.10;5;\nvrt1;0.00;9999;\n");
        let out = tick(
            now,
            &snap,
            &mut ctl,
            &config,
            &StageConfig::default(),
            PlacementMode::MinLoad,
        )
        .unwrap();
        assert_eq!(out.len(), 1, "no clear inside the hour");
        assert_eq!(out[0].action.kind, ActionKind::Reboot);
        assert_eq!(out[0].record.as_ref().unwrap().flag, Flag::RebootIssued);
    }

    #[test]
    fn reboot_targets_the_owner_even_when_it_is_over_threshold() {
        let (config, mut ctl) = fixture();
        ctl.write(
            "vrt1",
            &VmRecoveryState {
                owner_ph: "alfa01".into(),
                last_action_at: "2008-06-01/11:48:00".parse().unwrap(),
                flag: Flag::Cleared,
            },
            0,
        )
        .unwrap();
        let now: Timestamp = "2008-06-01/12:00:00".parse().unwrap();
        // Owner loaded past its threshold; the reboot still goes to it.
        let snap = snapshot_at(now, "alfa01;12.00;5;\nalfa02;0.10;5;\nvrt1;0.00;9999;\n");
        let out = tick(
            now,
            &snap,
            &mut ctl,
            &config,
            &StageConfig::default(),
            PlacementMode::MinLoad,
        )
        .unwrap();
        assert_eq!(out[0].action.kind, ActionKind::Reboot);
        assert_eq!(out[0].action.to_ph, "alfa01");
        let rec = out[0].record.as_ref().unwrap();
        assert_eq!((rec.ph1.as_str(), rec.ph2.as_str()), ("alfa01", "alfa01"));
        assert_eq!(ctl.read("vrt1").unwrap().0.owner_ph, "alfa01");
    }

    #[test]
    fn dead_vm_inside_window_waits() {
        let (config, mut ctl) = fixture();
        ctl.write(
            "vrt1",
            &VmRecoveryState {
                owner_ph: "alfa01".into(),
                last_action_at: "2008-06-01/11:58:00".parse().unwrap(),
                flag: Flag::RebootIssued,
            },
            1,
        )
        .unwrap();
        let now: Timestamp = "2008-06-01/12:00:00".parse().unwrap(); // delta 120 <= 200
        let snap = snapshot_at(now, "alfa01;0.10;5;\nalfa02;0.10;5;\nvrt1;0.00;9999;\n");
        let out = tick(
            now,
            &snap,
            &mut ctl,
            &config,
            &StageConfig::default(),
            PlacementMode::MinLoad,
        )
        .unwrap();
        assert_eq!(out.len(), 1);
        let rec = out[0].record.as_ref().unwrap();
        assert_eq!(rec.act, "..wait");
        assert_eq!(rec.flag, Flag::RebootIssued);
        // Wait records leave the store untouched.
        assert_eq!(
            ctl.read("vrt1").unwrap().0.last_action_at,
            "2008-06-01/11:58:00".parse().unwrap()
        );
    }

    #[test]
    fn missing_state_defaults_to_first_ph_and_epoch() {
        let (config, mut ctl) = fixture();
        let now: Timestamp = "2008-06-01/12:00:00".parse().unwrap();
        let snap = snapshot_at(now, "alfa01;0.10;5;\nalfa02;0.10;5;\nvrt1;0.00;9999;\n");
        let out = tick(
            now,
            &snap,
            &mut ctl,
            &config,
            &StageConfig::default(),
            PlacementMode::MinLoad,
        )
        .unwrap();
        // Epoch-old history: clear banner plus reboot on the default owner.
        assert_eq!(out[0].action.kind, ActionKind::Clear);
        assert_eq!(out[1].action.to_ph, "alfa01");
    }

    #[test]
    fn flag2_reinstallable_reinstalls_and_resets() {
        let (config, mut ctl) = fixture();
        ctl.write(
            "vrt1",
            &VmRecoveryState {
                owner_ph: "alfa01".into(),
                last_action_at: "2008-06-01/11:50:00".parse().unwrap(),
                flag: Flag::RestartIssued,
            },
            1,
        )
        .unwrap();
        let now: Timestamp = "2008-06-01/11:55:00".parse().unwrap(); // delta 300
        let snap = snapshot_at(now, "alfa01;0.10;5;\nalfa02;0.10;5;\nvrt1;0.00;9999;\n");
        let out = tick(
            now,
            &snap,
            &mut ctl,
            &config,
            &StageConfig::default(),
            PlacementMode::MinLoad,
        )
        .unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].action.kind, ActionKind::Reinstall);
        assert_eq!(ctl.read("vrt1").unwrap().0.flag, Flag::Cleared);
    }

    #[test]
    fn flag2_non_reinstallable_logs_noop_with_act_token() {
        let config = parse_hosts_def("PH alfa01 10\nVM fixed 0\n").unwrap();
        let mut ctl = ControllerState::new(MemStateStore::new());
        ctl.write(
            "fixed",
            &VmRecoveryState {
                owner_ph: "alfa01".into(),
                last_action_at: "2008-06-01/11:50:00".parse().unwrap(),
                flag: Flag::RestartIssued,
            },
            1,
        )
        .unwrap();
        let now: Timestamp = "2008-06-01/11:55:00".parse().unwrap();
        let snap = snapshot_at(now, "alfa01;0.10;5;\nfixed;0.00;9999;\n");
        let out = tick(
            now,
            &snap,
            &mut ctl,
            &config,
            &StageConfig::default(),
            PlacementMode::MinLoad,
        )
        .unwrap();
        assert_eq!(out[0].action.kind, ActionKind::NoopEscalate);
        assert_eq!(out[0].action.banner(), None);
        assert_eq!(out[0].record.as_ref().unwrap().act, "ACT");
        assert_eq!(ctl.read("fixed").unwrap().0.flag, Flag::Cleared);
    }

    #[test]
    fn restart_with_no_capacity_waits_without_touching_state() {
        let (config, mut ctl) = fixture();
        let before = VmRecoveryState {
            owner_ph: "alfa01".into(),
            last_action_at: "2008-06-01/11:50:00".parse().unwrap(),
            flag: Flag::RebootIssued,
        };
        ctl.write("vrt1", &before, 1).unwrap();
        let now: Timestamp = "2008-06-01/11:55:00".parse().unwrap();
        // Both hosts over their threshold.
        let snap = snapshot_at(now, "alfa01;11.00;5;\nalfa02;12.00;5;\nvrt1;0.00;9999;\n");
        let out = tick(
            now,
            &snap,
            &mut ctl,
            &config,
            &StageConfig::default(),
            PlacementMode::MinLoad,
        )
        .unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].record.as_ref().unwrap().act, "..wait");
        assert_eq!(ctl.read("vrt1").unwrap().0, before);
    }

    #[test]
    fn dead_unknown_hosts_are_ignored() {
        let (config, mut ctl) = fixture();
        let now: Timestamp = "2008-06-01/12:00:00".parse().unwrap();
        let snap = snapshot_at(
            now,
            "alfa01;0.10;5;\nalfa02;0.10;5;\nvrt1;0.00;9;\nstranger;0.00;9999;\n",
        );
        let out = tick(
            now,
            &snap,
            &mut ctl,
            &config,
            &StageConfig::default(),
            PlacementMode::MinLoad,
        )
        .unwrap();
        assert!(out.is_empty());
    }
}
