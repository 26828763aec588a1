//! Choice of the physical host that takes a recovering virtual machine.
//!
//! A host is eligible when its heartbeat is alive and its 5-minute load,
//! truncated to hundredths, does not exceed its configured threshold. The
//! current owner keeps the VM whenever it is eligible; otherwise the least
//! loaded eligible host wins, ties broken by hosted-VM count and then by
//! declaration order. If nothing is eligible the VM waits.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::cluster::{ClusterConfig, Load};
use crate::monitor::{is_dead, HostStatusView, MonitorSample};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlacementError {
    #[error("`{0}` is not a virtual machine under HA control")]
    UnknownVm(String),
    #[error("`{0}` is not a declared physical host")]
    UnknownPh(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlacementDecision {
    /// The current owner stays in charge.
    SamePh(String),
    /// The VM moves to another physical host.
    MovedPh(String),
    /// No physical host can take the VM right now.
    WaitNoCapacity,
}

/// How a replacement host is picked among the eligible ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlacementMode {
    /// Least truncated load, then fewest hosted VMs, then declaration order.
    #[default]
    MinLoad,
    /// Keep the last eligible host in declaration order, reproducing the
    /// original production controller's scan for trace-fidelity replays.
    LastEligible,
}

/// Eligibility test: heartbeat alive and truncated-hundredths load at or
/// under the threshold. `10.009` against a threshold of `10` passes, since
/// both truncate to 1000 hundredths.
pub fn load_eligible(sample: &MonitorSample, max_load: Load) -> bool {
    !is_dead(sample) && sample.load().hundredths() <= max_load.hundredths()
}

pub fn choose_host(
    vm: &str,
    current_ph: &str,
    view: &HostStatusView,
    config: &ClusterConfig,
    vm_counts: &BTreeMap<String, u32>,
    mode: PlacementMode,
) -> Result<PlacementDecision, PlacementError> {
    if config.vm(vm).is_none() {
        return Err(PlacementError::UnknownVm(vm.to_string()));
    }
    let current = config
        .ph(current_ph)
        .ok_or_else(|| PlacementError::UnknownPh(current_ph.to_string()))?;
    let eligible = |name: &str, max_load: Load| {
        view.sample(name)
            .map(|s| load_eligible(s, max_load))
            .unwrap_or(false)
    };
    if eligible(&current.name, current.max_load) {
        return Ok(PlacementDecision::SamePh(current.name.clone()));
    }
    let candidates = config
        .phs()
        .filter(|ph| ph.name != current.name && eligible(&ph.name, ph.max_load));
    let chosen = match mode {
        PlacementMode::MinLoad => candidates.min_by_key(|ph| {
            (
                view.sample(&ph.name)
                    .map(|s| s.load().hundredths())
                    .unwrap_or(u32::MAX),
                vm_counts.get(&ph.name).copied().unwrap_or(0),
                config.decl_index(&ph.name).unwrap_or(usize::MAX),
            )
        }),
        PlacementMode::LastEligible => candidates.last(),
    };
    Ok(match chosen {
        Some(ph) => PlacementDecision::MovedPh(ph.name.clone()),
        None => PlacementDecision::WaitNoCapacity,
    })
}
