//! Execution model for reboot / restart / reinstall, including the network
//! boot pathway a reinstall rides on.
//!
//! A reinstall works by repointing the boot-configuration link for the VM's
//! address at an installer profile: the next network boot then loads the
//! installer kernel instead of booting from disk. The link name is the
//! VM's IPv4 address as eight uppercase hex digits.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::net::Ipv4Addr;
use std::path::PathBuf;

use thiserror::Error;

use crate::cluster::VmSpec;
use crate::fsm::{ActionKind, RecoveryAction};
use crate::rng::TrialRng;
use crate::sim::{ClusterState, SimEventKind, TimingModel};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ActionError {
    #[error("malformed IPv4 address `{0}`")]
    BadAddress(String),
    #[error("`{0}` is not flagged reinstallable")]
    NotReinstallable(String),
    #[error("`{0}` has no OS profile configured")]
    MissingProfile(String),
    #[error("profile directory error: {0}")]
    Io(String),
}

/// Dotted-quad to the eight-hex-digit boot link name: `192.168.1.10`
/// becomes `C0A8010A`.
pub fn ip_to_hex(ip: &str) -> Result<String, ActionError> {
    let addr: Ipv4Addr = ip
        .parse()
        .map_err(|_| ActionError::BadAddress(ip.to_string()))?;
    Ok(hex_name(addr))
}

pub fn hex_name(addr: Ipv4Addr) -> String {
    let o = addr.octets();
    format!("{:02X}{:02X}{:02X}{:02X}", o[0], o[1], o[2], o[3])
}

/// Deterministic synthetic address for the `index`-th declared VM.
pub fn vm_ip_for_index(index: usize) -> Ipv4Addr {
    Ipv4Addr::new(192, 168, (index / 254) as u8, (index % 254 + 1) as u8)
}

/// One staged boot-link: address, link name, target profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PxeProfileLink {
    pub vm_ip: Ipv4Addr,
    pub hex_name: String,
    pub os_profile: String,
}

/// The boot-configuration namespace: link name -> profile token.
///
/// Purely in memory by default; with a backing directory each link is also
/// written out as a file named after the hex address whose single line is
/// the profile token, for trace inspection.
#[derive(Debug, Default)]
pub struct ProfileNamespace {
    links: BTreeMap<String, String>,
    dir: Option<PathBuf>,
}

impl ProfileNamespace {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn backed_by_dir(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(ProfileNamespace {
            links: BTreeMap::new(),
            dir: Some(dir),
        })
    }

    pub fn get(&self, hex: &str) -> Option<&str> {
        self.links.get(hex).map(String::as_str)
    }

    pub fn links(&self) -> impl Iterator<Item = (&str, &str)> {
        self.links.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    fn stage(&mut self, hex: String, profile: String) -> Result<(), ActionError> {
        if let Some(dir) = &self.dir {
            fs::write(dir.join(&hex), format!("{profile}\n"))
                .map_err(|e| ActionError::Io(e.to_string()))?;
        }
        self.links.insert(hex, profile);
        Ok(())
    }
}

/// Points the VM's boot link at its installer profile, replacing whatever
/// the link held before, so the next network boot starts the installation.
pub fn stage_reinstall_profile(
    vm: &VmSpec,
    vm_ip: Ipv4Addr,
    namespace: &mut ProfileNamespace,
) -> Result<PxeProfileLink, ActionError> {
    if !vm.reinstallable {
        return Err(ActionError::NotReinstallable(vm.name.clone()));
    }
    let profile = vm
        .os_profile
        .clone()
        .ok_or_else(|| ActionError::MissingProfile(vm.name.clone()))?;
    let hex = hex_name(vm_ip);
    namespace.stage(hex.clone(), profile.clone())?;
    Ok(PxeProfileLink {
        vm_ip,
        hex_name: hex,
        os_profile: profile,
    })
}

/// Messages of the network boot exchange.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PxeStep {
    Discover,
    Offer,
    Request,
    /// The DHCP acknowledgement; carries the boot file name when the DHCP
    /// server is also the boot server.
    Ack {
        boot_file: Option<String>,
    },
    BootServerRequest,
    BootServerReply {
        boot_file: String,
    },
    TftpFetch {
        boot_file: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PxeExchange {
    pub client: String,
    pub steps: Vec<PxeStep>,
}

const BOOT_FILE: &str = "pxelinux.0";

/// The boot handshake for one client. With a combined DHCP/boot server the
/// acknowledgement already names the boot file and the exchange is five
/// steps; a separate boot server adds one more request/reply pair.
pub fn pxe_handshake(client: &str, combined_server: bool) -> PxeExchange {
    let mut steps = vec![PxeStep::Discover, PxeStep::Offer, PxeStep::Request];
    if combined_server {
        steps.push(PxeStep::Ack {
            boot_file: Some(BOOT_FILE.to_string()),
        });
    } else {
        steps.push(PxeStep::Ack { boot_file: None });
        steps.push(PxeStep::BootServerRequest);
        steps.push(PxeStep::BootServerReply {
            boot_file: BOOT_FILE.to_string(),
        });
    }
    steps.push(PxeStep::TftpFetch {
        boot_file: BOOT_FILE.to_string(),
    });
    PxeExchange {
        client: client.to_string(),
        steps,
    }
}

/// Checks an exchange against the fixed grammar: DISCOVER, OFFER, REQUEST,
/// ACK, optionally one boot-server round trip, then the TFTP fetch.
pub fn validate_exchange(exchange: &PxeExchange) -> bool {
    let s = &exchange.steps;
    let head_ok = matches!(
        (s.first(), s.get(1), s.get(2)),
        (
            Some(PxeStep::Discover),
            Some(PxeStep::Offer),
            Some(PxeStep::Request)
        )
    );
    if !head_ok {
        return false;
    }
    match (s.get(3), s.len()) {
        (Some(PxeStep::Ack { boot_file: Some(_) }), 5) => {
            matches!(s[4], PxeStep::TftpFetch { .. })
        }
        (Some(PxeStep::Ack { boot_file: None }), 7) => {
            matches!(s[4], PxeStep::BootServerRequest)
                && matches!(s[5], PxeStep::BootServerReply { .. })
                && matches!(s[6], PxeStep::TftpFetch { .. })
        }
        _ => false,
    }
}

/// Applies a controller action to the simulated cluster and returns the
/// completion events it schedules, as `(at, event)` pairs.
///
/// A reboot is fire-and-forget: it only lands if the guest still answers
/// its soft channel, and it is silently lost otherwise. Restart and
/// reinstall are dropped whole when the target host is down at execution
/// time; the controller's next pass escalates further.
pub fn execute(
    action: &RecoveryAction,
    vm_spec: Option<&VmSpec>,
    cluster: &mut ClusterState,
    rng: &mut TrialRng,
    timing: &TimingModel,
    namespace: &mut ProfileNamespace,
) -> Vec<(i64, SimEventKind)> {
    let now = action.issued_at.secs();
    match action.kind {
        ActionKind::Wait | ActionKind::Clear | ActionKind::NoopEscalate => Vec::new(),
        ActionKind::Reboot => {
            let penalty = cluster.ensure_daemon(&action.to_ph, timing);
            let Some(vm) = cluster.vms.get_mut(&action.vm) else {
                return Vec::new();
            };
            if !(vm.powered && vm.reboot_responsive) {
                return Vec::new(); // unreachable guest, reboot lost
            }
            vm.responsive = false;
            let done = now + penalty + timing.pxe_setup + timing.boot.draw(rng);
            vec![(
                done,
                SimEventKind::ActionComplete {
                    vm: action.vm.clone(),
                    revive: !vm.boot_damaged,
                    repairs: false,
                },
            )]
        }
        ActionKind::Restart => {
            if !cluster.ph_up(&action.to_ph) {
                return Vec::new();
            }
            let penalty = cluster.ensure_daemon(&action.to_ph, timing);
            let Some(vm) = cluster.vms.get_mut(&action.vm) else {
                return Vec::new();
            };
            // Power off wherever it was, power on at the target.
            vm.host = action.to_ph.clone();
            vm.powered = true;
            vm.responsive = false;
            let done = now + penalty + timing.pxe_setup + timing.boot.draw(rng);
            vec![(
                done,
                SimEventKind::ActionComplete {
                    vm: action.vm.clone(),
                    revive: !vm.boot_damaged,
                    repairs: false,
                },
            )]
        }
        ActionKind::Reinstall => {
            if !cluster.ph_up(&action.to_ph) {
                return Vec::new();
            }
            let Some(spec) = vm_spec else {
                return Vec::new();
            };
            let penalty = cluster.ensure_daemon(&action.to_ph, timing);
            let Some(vm) = cluster.vms.get_mut(&action.vm) else {
                return Vec::new();
            };
            let Ok(_link) = stage_reinstall_profile(spec, vm.ip, namespace) else {
                return Vec::new(); // nothing staged, nothing to boot
            };
            vm.host = action.to_ph.clone();
            vm.powered = true;
            vm.responsive = false;
            // Install, then the fresh system reboots through the network
            // boot path once more before coming up from disk.
            let done = now
                + penalty
                + timing.pxe_setup
                + timing.install.draw(rng)
                + timing.pxe_setup
                + timing.boot.draw(rng);
            vec![(
                done,
                SimEventKind::ActionComplete {
                    vm: action.vm.clone(),
                    revive: true,
                    repairs: true,
                },
            )]
        }
    }
}
