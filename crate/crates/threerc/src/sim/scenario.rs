//! Crash scenarios and the timing model.

use crate::fsm::StageConfig;
use crate::rng::TrialRng;

/// Truncated-normal duration in whole seconds. A zero standard deviation
/// degenerates to the rounded mean, which replays use for exact traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncNormalSpec {
    pub mean: f64,
    pub sd: f64,
    pub min: i64,
    pub max: i64,
}

impl TruncNormalSpec {
    pub fn constant(secs: i64) -> Self {
        TruncNormalSpec {
            mean: secs as f64,
            sd: 0.0,
            min: secs,
            max: secs,
        }
    }

    pub fn draw(&self, rng: &mut TrialRng) -> i64 {
        rng.trunc_normal_secs(self.mean, self.sd, self.min, self.max)
    }
}

/// Monitor detection latency: a 70-second average, optionally jittered by
/// half the monitor's 15-second polling interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectionLatency {
    pub base: i64,
    pub jitter: bool,
}

impl DetectionLatency {
    pub fn draw(&self, rng: &mut TrialRng) -> i64 {
        if self.jitter {
            // Uniform over [base-7, base+7], the poll-interval half-width.
            self.base + rng.uniform_secs(-7, 8)
        } else {
            self.base
        }
    }
}

/// Durations governing the simulated cluster.
///
/// Boot and install times are truncated normals fitted to measured recovery
/// distributions (boot 70 +/- 10 s within [40, 100], install 352 +/- 17 s
/// within [300, 404]); network-boot setup is a constant 10 s and a
/// hypervisor-daemon restore costs 20 s when needed.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingModel {
    pub detection: DetectionLatency,
    pub pxe_setup: i64,
    pub boot: TruncNormalSpec,
    pub install: TruncNormalSpec,
    pub daemon_restart: i64,
}

impl Default for TimingModel {
    fn default() -> Self {
        TimingModel {
            detection: DetectionLatency {
                base: 70,
                jitter: false,
            },
            pxe_setup: 10,
            boot: TruncNormalSpec {
                mean: 70.0,
                sd: 10.0,
                min: 40,
                max: 100,
            },
            install: TruncNormalSpec {
                mean: 352.0,
                sd: 17.0,
                min: 300,
                max: 404,
            },
            daemon_restart: 20,
        }
    }
}

/// What breaks, and how.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CrashKind {
    /// The guest is halted outright; nothing answers afterwards.
    SwitchOff,
    /// The guest hangs under load; whether the soft reboot channel still
    /// answers is the scenario's call (usually it does not).
    LoadHang { reboot_responsive: bool },
    /// The boot partition is destroyed: the guest survives no power cycle
    /// and only a full reinstall brings it back.
    DestructiveBootErase,
    /// A physical host loses power, taking every hosted VM down with it.
    PhPowerGlitch,
}

/// What a trial measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    /// Crash to resumed heartbeat.
    Recovery,
    /// Crash to the first controller pass that reacts to it.
    Awareness,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrashScenario {
    pub kind: CrashKind,
    /// Host to break; defaults to the first VM (or first PH for a power
    /// glitch) in declaration order.
    pub target: Option<String>,
    pub stage: StageConfig,
    /// Start the target at flag 2 with recent history, so the first acting
    /// pass reinstalls immediately. Used by the destructive benchmark.
    pub preset_reinstall: bool,
    pub measure: Measure,
}

pub const SCENARIO_NAMES: [&str; 5] = [
    "switchoff",
    "loadhang",
    "destructive",
    "glitch",
    "awareness",
];

/// The named scenario presets exposed by the command line.
///
/// The two benchmark presets mirror how the reference measurements were
/// taken: `switchoff` skips the pointless reboot stage (a halted guest
/// cannot hear it), and `destructive` presets the escalation to reinstall.
/// `loadhang` and `glitch` keep the full reboot-first ladder.
pub fn scenario_preset(name: &str) -> Option<CrashScenario> {
    let no_reboot = StageConfig {
        reboot_enabled: false,
        ..StageConfig::default()
    };
    match name {
        "switchoff" => Some(CrashScenario {
            kind: CrashKind::SwitchOff,
            target: None,
            stage: no_reboot,
            preset_reinstall: false,
            measure: Measure::Recovery,
        }),
        "loadhang" => Some(CrashScenario {
            kind: CrashKind::LoadHang {
                reboot_responsive: false,
            },
            target: None,
            stage: StageConfig::default(),
            preset_reinstall: false,
            measure: Measure::Recovery,
        }),
        "destructive" => Some(CrashScenario {
            kind: CrashKind::DestructiveBootErase,
            target: None,
            stage: StageConfig::default(),
            preset_reinstall: true,
            measure: Measure::Recovery,
        }),
        "glitch" => Some(CrashScenario {
            kind: CrashKind::PhPowerGlitch,
            target: None,
            stage: StageConfig::default(),
            preset_reinstall: false,
            measure: Measure::Recovery,
        }),
        "awareness" => Some(CrashScenario {
            kind: CrashKind::SwitchOff,
            target: None,
            stage: no_reboot,
            preset_reinstall: false,
            measure: Measure::Awareness,
        }),
        _ => None,
    }
}
