//! Relaxed high availability for virtualized clusters.
//!
//! A crashed virtual machine is recovered by a controller that escalates
//! through three intervention levels — reboot the guest, restart the
//! virtual layer (possibly on another physical host), reinstall the
//! operating system from scratch over network boot — keeping a small
//! hysteresis state per VM so the next action depends on what was already
//! tried. The crate also ships a deterministic discrete-event simulator
//! that injects crashes into a modeled cluster and measures recovery
//! times, plus the statistics helpers used to summarize campaigns.

pub mod actions;
pub mod cluster;
pub mod fsm;
pub mod monitor;
pub mod placement;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod store;
pub mod time;
