//! Per-VM recovery state persistence.
//!
//! The controller keeps one line per virtual machine — `PH TIMESTAMP FLAG` —
//! recording which physical host owns it, when the last action was taken,
//! and the escalation flag. In production this is a directory of one-line
//! files on a shared area so the state survives controller crashes; the
//! simulator uses an in-memory store with the same contract.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::fsm::{Flag, VmRecoveryState};
use crate::time::Timestamp;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StateParseError {
    #[error("expected `PH TIMESTAMP FLAG`, got `{0}`")]
    Layout(String),
    #[error("bad timestamp in state line: {0}")]
    Time(#[from] crate::time::TimeError),
    #[error("bad flag in state line: `{0}`")]
    Flag(String),
}

/// Renders a state as the one-line file body, trailing newline included.
pub fn format_vm_state(state: &VmRecoveryState) -> String {
    format!(
        "{} {} {}\n",
        state.owner_ph,
        state.last_action_at,
        state.flag.as_u8()
    )
}

pub fn parse_vm_state(text: &str) -> Result<VmRecoveryState, StateParseError> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(StateParseError::Layout(text.trim_end().to_string()));
    }
    let last_action_at: Timestamp = fields[1].parse()?;
    let flag = fields[2]
        .parse::<u8>()
        .ok()
        .and_then(Flag::from_u8)
        .ok_or_else(|| StateParseError::Flag(fields[2].to_string()))?;
    Ok(VmRecoveryState {
        owner_ph: fields[0].to_string(),
        last_action_at,
        flag,
    })
}

/// Read/write contract shared by the directory store and the in-memory one.
///
/// An unreadable or unparseable entry reads as `None`; the controller then
/// falls back to its missing-state default.
pub trait StateStore {
    fn read(&self, vm: &str) -> Option<VmRecoveryState>;
    fn write(&mut self, vm: &str, state: &VmRecoveryState) -> io::Result<()>;
    /// `(vm, owner_ph)` pairs in deterministic (name) order.
    fn owners(&self) -> Vec<(String, String)>;
}

#[derive(Debug, Default)]
pub struct MemStateStore {
    states: BTreeMap<String, VmRecoveryState>,
}

impl MemStateStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl StateStore for MemStateStore {
    fn read(&self, vm: &str) -> Option<VmRecoveryState> {
        self.states.get(vm).cloned()
    }

    fn write(&mut self, vm: &str, state: &VmRecoveryState) -> io::Result<()> {
        self.states.insert(vm.to_string(), state.clone());
        Ok(())
    }

    fn owners(&self) -> Vec<(String, String)> {
        self.states
            .iter()
            .map(|(vm, st)| (vm.clone(), st.owner_ph.clone()))
            .collect()
    }
}

/// Directory of one-line files keyed by VM name.
#[derive(Debug)]
pub struct DirStateStore {
    dir: PathBuf,
}

impl DirStateStore {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(DirStateStore { dir })
    }
}

impl StateStore for DirStateStore {
    fn read(&self, vm: &str) -> Option<VmRecoveryState> {
        let text = fs::read_to_string(self.dir.join(vm)).ok()?;
        parse_vm_state(&text).ok()
    }

    fn write(&mut self, vm: &str, state: &VmRecoveryState) -> io::Result<()> {
        fs::write(self.dir.join(vm), format_vm_state(state))
    }

    fn owners(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let Ok(entries) = fs::read_dir(&self.dir) else {
            return out;
        };
        for entry in entries.flatten() {
            let Ok(name) = entry.file_name().into_string() else {
                continue;
            };
            if let Some(state) = self.read(&name) {
                out.push((name, state.owner_ph));
            }
        }
        out.sort();
        out
    }
}

/// Everything the controller carries between ticks: the persistent state
/// store plus the volatile per-stage repeat counters. The counters are not
/// part of the state-file format, so a controller restart resets them.
#[derive(Debug)]
pub struct ControllerState<S: StateStore> {
    pub store: S,
    repeats: BTreeMap<String, u32>,
}

impl<S: StateStore> ControllerState<S> {
    pub fn new(store: S) -> Self {
        ControllerState {
            store,
            repeats: BTreeMap::new(),
        }
    }

    pub fn read(&self, vm: &str) -> Option<(VmRecoveryState, u32)> {
        let state = self.store.read(vm)?;
        let repeats = self.repeats.get(vm).copied().unwrap_or(0);
        Some((state, repeats))
    }

    pub fn write(&mut self, vm: &str, state: &VmRecoveryState, repeats: u32) -> io::Result<()> {
        self.store.write(vm, state)?;
        self.repeats.insert(vm.to_string(), repeats);
        Ok(())
    }

    /// Number of VMs each physical host currently owns, per the store.
    pub fn vm_count_by_ph(&self) -> BTreeMap<String, u32> {
        let mut counts = BTreeMap::new();
        for (_, ph) in self.store.owners() {
            *counts.entry(ph).or_insert(0) += 1;
        }
        counts
    }
}
