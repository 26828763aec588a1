//! Deterministic discrete-event cluster simulator.
//!
//! A trial owns a virtual clock in whole seconds, an event queue, a modeled
//! cluster, and a controller state store. Crashes are injected, the monitor
//! declares hosts dead after a detection latency, controller passes run on
//! a 60-second grid, and recovery actions schedule their completions
//! through the timing model. Everything is driven by a seeded generator,
//! so a `(config, scenario, timing, seed)` tuple fully determines every
//! sample and every log byte.

mod engine;
mod scenario;
mod script;

pub use engine::{
    campaign_to_csv, parse_campaign_csv, run_campaign, run_trial, CampaignMeta, ClusterState,
    ControllerSchedule, CsvError, Engine, PhRuntime, RecoverySample, ReplayOutcome, RunEnd,
    SimError, SimEvent, SimEventKind, StopWhen, VmRuntime, CAMPAIGN_BASE_SECS,
};
pub use scenario::{
    scenario_preset, CrashKind, CrashScenario, DetectionLatency, Measure, TimingModel,
    TruncNormalSpec, SCENARIO_NAMES,
};
pub use script::{parse_replay_script, replay, replay_with_store, ReplayScript, ScriptError};
