//! Semantics of action execution against the modeled cluster: which actions
//! get lost, what they schedule, and how the boot-link staging orders.

use threerc::actions::{execute, ProfileNamespace};
use threerc::cluster::parse_hosts_def;
use threerc::fsm::{ActionKind, RecoveryAction};
use threerc::rng::TrialRng;
use threerc::sim::{ClusterState, SimEventKind, TimingModel, TruncNormalSpec};
use threerc::time::Timestamp;

fn fixture() -> (threerc::cluster::ClusterConfig, ClusterState) {
    let config = parse_hosts_def("PH alfa01 10\nPH alfa02 10\nVM vrt1 1 sl4-32 ig_CE\n").unwrap();
    let cluster = ClusterState::from_config(&config);
    (config, cluster)
}

fn constant_timing() -> TimingModel {
    TimingModel {
        boot: TruncNormalSpec::constant(70),
        install: TruncNormalSpec::constant(352),
        ..TimingModel::default()
    }
}

fn action(kind: ActionKind, from: &str, to: &str, at: i64) -> RecoveryAction {
    RecoveryAction {
        kind,
        vm: "vrt1".into(),
        from_ph: from.into(),
        to_ph: to.into(),
        issued_at: Timestamp::from_secs(at),
    }
}

#[test]
fn reboot_of_a_powered_off_guest_is_lost() {
    let (config, mut cluster) = fixture();
    cluster.vms.get_mut("vrt1").unwrap().powered = false;
    cluster.vms.get_mut("vrt1").unwrap().reboot_responsive = false;
    let events = execute(
        &action(ActionKind::Reboot, "alfa01", "alfa01", 1000),
        config.vm("vrt1"),
        &mut cluster,
        &mut TrialRng::new(1),
        &constant_timing(),
        &mut ProfileNamespace::in_memory(),
    );
    assert!(events.is_empty());
}

#[test]
fn reboot_of_a_responsive_guest_schedules_a_boot() {
    let (config, mut cluster) = fixture();
    let vm = cluster.vms.get_mut("vrt1").unwrap();
    vm.responsive = false;
    vm.reboot_responsive = true;
    let events = execute(
        &action(ActionKind::Reboot, "alfa01", "alfa01", 1000),
        config.vm("vrt1"),
        &mut cluster,
        &mut TrialRng::new(1),
        &constant_timing(),
        &mut ProfileNamespace::in_memory(),
    );
    assert_eq!(events.len(), 1);
    assert_eq!(events[0].0, 1000 + 10 + 70);
    assert!(matches!(
        events[0].1,
        SimEventKind::ActionComplete { revive: true, .. }
    ));
}

#[test]
fn restart_moves_the_vm_and_completes_after_pxe_plus_boot() {
    let (config, mut cluster) = fixture();
    cluster.vms.get_mut("vrt1").unwrap().powered = false;
    let events = execute(
        &action(ActionKind::Restart, "alfa01", "alfa02", 5000),
        config.vm("vrt1"),
        &mut cluster,
        &mut TrialRng::new(1),
        &constant_timing(),
        &mut ProfileNamespace::in_memory(),
    );
    assert_eq!(events.len(), 1);
    assert!(events[0].0 > 5000, "completion strictly after issuance");
    assert_eq!(events[0].0, 5000 + 80);
    let vm = &cluster.vms["vrt1"];
    assert_eq!(vm.host, "alfa02");
    assert!(vm.powered && !vm.responsive);
}

#[test]
fn restart_to_a_dead_host_is_dropped() {
    let (config, mut cluster) = fixture();
    cluster.phs.get_mut("alfa02").unwrap().up = false;
    let events = execute(
        &action(ActionKind::Restart, "alfa01", "alfa02", 5000),
        config.vm("vrt1"),
        &mut cluster,
        &mut TrialRng::new(1),
        &constant_timing(),
        &mut ProfileNamespace::in_memory(),
    );
    assert!(events.is_empty());
    assert_eq!(cluster.vms["vrt1"].host, "alfa01", "nothing moved");
}

#[test]
fn reinstall_stages_the_link_before_any_boot_event_and_outlasts_restart() {
    let (config, mut cluster) = fixture();
    let mut namespace = ProfileNamespace::in_memory();
    let timing = constant_timing();
    let events = execute(
        &action(ActionKind::Reinstall, "alfa01", "alfa01", 7000),
        config.vm("vrt1"),
        &mut cluster,
        &mut TrialRng::new(1),
        &timing,
        &mut namespace,
    );
    // The link is in place the moment execute returns, strictly before the
    // scheduled boot completion.
    assert_eq!(namespace.get("C0A80001"), Some("sl4-32"));
    assert_eq!(events.len(), 1);
    // Installer entry pays the network-boot setup, and so does the
    // post-install boot: 10 + 352 + 10 + 70.
    assert_eq!(events[0].0, 7000 + 442);
    assert!(matches!(
        events[0].1,
        SimEventKind::ActionComplete {
            revive: true,
            repairs: true,
            ..
        }
    ));
    // For identical draws a reinstall strictly outlasts a restart.
    let mut cluster2 = ClusterState::from_config(&config);
    let restart = execute(
        &action(ActionKind::Restart, "alfa01", "alfa01", 7000),
        config.vm("vrt1"),
        &mut cluster2,
        &mut TrialRng::new(1),
        &timing,
        &mut ProfileNamespace::in_memory(),
    );
    assert!(events[0].0 > restart[0].0);
}

#[test]
fn reinstall_without_a_profile_is_dropped() {
    let config = parse_hosts_def("PH alfa01 10\nVM bare 1\n").unwrap();
    let mut cluster = ClusterState::from_config(&config);
    let mut namespace = ProfileNamespace::in_memory();
    let events = execute(
        &RecoveryAction {
            kind: ActionKind::Reinstall,
            vm: "bare".into(),
            from_ph: "alfa01".into(),
            to_ph: "alfa01".into(),
            issued_at: Timestamp::from_secs(100),
        },
        config.vm("bare"),
        &mut cluster,
        &mut TrialRng::new(1),
        &constant_timing(),
        &mut namespace,
    );
    assert!(events.is_empty());
    assert_eq!(namespace.links().count(), 0);
}

#[test]
fn downed_daemon_delays_the_completion_by_its_restore_time() {
    let (config, mut cluster) = fixture();
    cluster.phs.get_mut("alfa02").unwrap().daemon_up = false;
    let events = execute(
        &action(ActionKind::Restart, "alfa01", "alfa02", 3000),
        config.vm("vrt1"),
        &mut cluster,
        &mut TrialRng::new(1),
        &constant_timing(),
        &mut ProfileNamespace::in_memory(),
    );
    assert_eq!(events[0].0, 3000 + 20 + 80);
    assert!(cluster.phs["alfa02"].daemon_up, "daemon restored");
}

#[test]
fn wait_clear_and_noop_execute_nothing() {
    let (config, mut cluster) = fixture();
    for kind in [
        ActionKind::Wait,
        ActionKind::Clear,
        ActionKind::NoopEscalate,
    ] {
        let events = execute(
            &action(kind, "alfa01", "alfa01", 100),
            config.vm("vrt1"),
            &mut cluster,
            &mut TrialRng::new(1),
            &constant_timing(),
            &mut ProfileNamespace::in_memory(),
        );
        assert!(events.is_empty(), "{kind:?} scheduled something");
    }
}
