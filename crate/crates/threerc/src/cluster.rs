//! Cluster topology declared in `hosts.def`.
//!
//! The file is line oriented: `#` starts a comment, fields are separated by
//! whitespace. A `PH` row declares a physical host and its maximum
//! admissible 5-minute load; a `VM` row declares a virtual machine, whether
//! it may be reinstalled from scratch, and its OS/middleware profile:
//!
//! ```text
//! # TYPE HOSTNAME MAXL INST OS MW
//! PH physic01 10
//! VM virtual1 0 sl4-32 ig_CE
//! ```

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: duplicate host name `{name}`")]
    DuplicateName { line: usize, name: String },
    #[error("line {line}: host `{name}` shares its first DNS label with `{other}`")]
    AmbiguousLabel {
        line: usize,
        name: String,
        other: String,
    },
    #[error("line {line}: unknown host kind `{token}` (expected PH or VM)")]
    UnknownKind { line: usize, token: String },
    #[error("line {line}: invalid numeric field `{value}`")]
    InvalidNumber { line: usize, value: String },
    #[error("line {line}: physical host load threshold must be positive")]
    NonPositiveLoad { line: usize },
    #[error("line {line}: expected at least 3 fields, got {got}")]
    MissingFields { line: usize, got: usize },
    #[error("line {line}: invalid host name `{name}`")]
    BadName { line: usize, name: String },
    #[error("a virtual machine is declared but no physical host is")]
    VmWithoutPh,
}

/// Load-average value held in integer hundredths.
///
/// Comparisons in the placement path truncate loads at the second decimal,
/// so this type stores the truncated value outright: `"10.009"` parses to
/// 1000 hundredths. Rendering always prints two decimals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Load(u32);

impl Load {
    pub fn from_hundredths(h: u32) -> Self {
        Load(h)
    }

    pub fn hundredths(self) -> u32 {
        self.0
    }

    /// Parses a non-negative decimal, truncating past the second fraction
    /// digit. Works on the text so `1.15` is exactly 115 hundredths.
    pub fn parse(text: &str) -> Option<Load> {
        let (int_part, frac_part) = match text.split_once('.') {
            Some((i, f)) => (i, f),
            None => (text, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return None;
        }
        let whole: u32 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().ok()?
        };
        let mut frac = 0u32;
        let mut digits = frac_part.bytes().take(2);
        frac += u32::from(digits.next().map_or(0, |b| b - b'0')) * 10;
        frac += u32::from(digits.next().map_or(0, |b| b - b'0'));
        whole.checked_mul(100)?.checked_add(frac).map(Load)
    }
}

impl fmt::Display for Load {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhSpec {
    pub name: String,
    pub max_load: Load,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VmSpec {
    pub name: String,
    pub reinstallable: bool,
    pub os_profile: Option<String>,
    pub middleware: Option<String>,
}

/// One `hosts.def` row: either a physical host or a virtual machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HostSpec {
    Ph(PhSpec),
    Vm(VmSpec),
}

impl HostSpec {
    pub fn name(&self) -> &str {
        match self {
            HostSpec::Ph(ph) => &ph.name,
            HostSpec::Vm(vm) => &vm.name,
        }
    }

    pub fn is_vm(&self) -> bool {
        matches!(self, HostSpec::Vm(_))
    }
}

/// The parsed cluster topology, declaration order preserved.
///
/// Declaration order is observable behavior: placement breaks ties by the
/// position of the physical host in this list.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClusterConfig {
    hosts: Vec<HostSpec>,
}

impl ClusterConfig {
    pub fn new(hosts: Vec<HostSpec>) -> Result<Self, ConfigError> {
        validate(&hosts, |_| 0)?;
        Ok(ClusterConfig { hosts })
    }

    pub fn hosts(&self) -> &[HostSpec] {
        &self.hosts
    }

    pub fn get(&self, name: &str) -> Option<&HostSpec> {
        self.hosts.iter().find(|h| h.name() == name)
    }

    pub fn ph(&self, name: &str) -> Option<&PhSpec> {
        match self.get(name) {
            Some(HostSpec::Ph(ph)) => Some(ph),
            _ => None,
        }
    }

    pub fn vm(&self, name: &str) -> Option<&VmSpec> {
        match self.get(name) {
            Some(HostSpec::Vm(vm)) => Some(vm),
            _ => None,
        }
    }

    pub fn phs(&self) -> impl Iterator<Item = &PhSpec> {
        self.hosts.iter().filter_map(|h| match h {
            HostSpec::Ph(ph) => Some(ph),
            HostSpec::Vm(_) => None,
        })
    }

    pub fn vms(&self) -> impl Iterator<Item = &VmSpec> {
        self.hosts.iter().filter_map(|h| match h {
            HostSpec::Vm(vm) => Some(vm),
            HostSpec::Ph(_) => None,
        })
    }

    /// Position of `name` in the declaration order.
    pub fn decl_index(&self, name: &str) -> Option<usize> {
        self.hosts.iter().position(|h| h.name() == name)
    }

    /// First declared physical host; the owner assumed for a VM whose
    /// recovery state was never written.
    pub fn default_owner(&self) -> Option<&PhSpec> {
        self.phs().next()
    }
}

/// First DNS label of a host name (`gridce.sns.it` -> `gridce`).
pub fn short_label(name: &str) -> &str {
    name.split('.').next().unwrap_or(name)
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name != "."
        && name != ".."
        && !name
            .chars()
            .any(|c| c.is_whitespace() || c == ';' || c == '#' || c == '/')
}

fn validate(hosts: &[HostSpec], line_of: impl Fn(usize) -> usize) -> Result<(), ConfigError> {
    for (idx, host) in hosts.iter().enumerate() {
        let name = host.name();
        if !valid_name(name) {
            return Err(ConfigError::BadName {
                line: line_of(idx),
                name: name.to_string(),
            });
        }
        for earlier in &hosts[..idx] {
            if earlier.name() == name {
                return Err(ConfigError::DuplicateName {
                    line: line_of(idx),
                    name: name.to_string(),
                });
            }
            // The monitor feed is matched by first label, so labels must be
            // unambiguous across the whole file.
            if short_label(earlier.name()) == short_label(name) {
                return Err(ConfigError::AmbiguousLabel {
                    line: line_of(idx),
                    name: name.to_string(),
                    other: earlier.name().to_string(),
                });
            }
        }
    }
    let any_vm = hosts.iter().any(|h| h.is_vm());
    let any_ph = hosts.iter().any(|h| !h.is_vm());
    if any_vm && !any_ph {
        return Err(ConfigError::VmWithoutPh);
    }
    Ok(())
}

/// Parses `hosts.def` text. Errors carry 1-based line numbers.
pub fn parse_hosts_def(text: &str) -> Result<ClusterConfig, ConfigError> {
    let mut hosts = Vec::new();
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < 3 {
            return Err(ConfigError::MissingFields {
                line: line_no,
                got: fields.len(),
            });
        }
        let name = fields[1].to_string();
        let host = match fields[0] {
            "PH" => {
                let max_load = Load::parse(fields[2]).ok_or(ConfigError::InvalidNumber {
                    line: line_no,
                    value: fields[2].to_string(),
                })?;
                if max_load.hundredths() == 0 {
                    return Err(ConfigError::NonPositiveLoad { line: line_no });
                }
                HostSpec::Ph(PhSpec { name, max_load })
            }
            "VM" => {
                let inst: u32 = fields[2].parse().map_err(|_| ConfigError::InvalidNumber {
                    line: line_no,
                    value: fields[2].to_string(),
                })?;
                HostSpec::Vm(VmSpec {
                    name,
                    reinstallable: inst == 1,
                    os_profile: fields.get(3).map(|s| s.to_string()),
                    middleware: fields.get(4).map(|s| s.to_string()),
                })
            }
            other => {
                return Err(ConfigError::UnknownKind {
                    line: line_no,
                    token: other.to_string(),
                })
            }
        };
        hosts.push(host);
        lines.push(line_no);
    }
    validate(&hosts, |idx| lines[idx])?;
    Ok(ClusterConfig { hosts })
}

/// Renders a config back to `hosts.def` text. Comments are not preserved;
/// `parse_hosts_def(serialize_hosts_def(c)) == c` for every valid config.
pub fn serialize_hosts_def(config: &ClusterConfig) -> String {
    let mut out = String::from("# TYPE HOSTNAME MAXL INST OS MW\n");
    for host in config.hosts() {
        match host {
            HostSpec::Ph(ph) => {
                out.push_str("PH ");
                out.push_str(&ph.name);
                out.push(' ');
                let h = ph.max_load.hundredths();
                if h % 100 == 0 {
                    out.push_str(&(h / 100).to_string());
                } else {
                    out.push_str(&ph.max_load.to_string());
                }
            }
            HostSpec::Vm(vm) => {
                out.push_str("VM ");
                out.push_str(&vm.name);
                out.push(' ');
                out.push(if vm.reinstallable { '1' } else { '0' });
                if let Some(os) = &vm.os_profile {
                    out.push(' ');
                    out.push_str(os);
                    if let Some(mw) = &vm.middleware {
                        out.push(' ');
                        out.push_str(mw);
                    }
                }
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ph_row() {
        let cfg = parse_hosts_def("PH physic01 10\n").unwrap();
        assert_eq!(
            cfg.hosts(),
            &[HostSpec::Ph(PhSpec {
                name: "physic01".into(),
                max_load: Load::from_hundredths(1000),
            })]
        );
    }

    #[test]
    fn parses_vm_row_with_profile() {
        let cfg = parse_hosts_def("PH p 10\nVM virtual1 0 sl4-32 ig_CE\n").unwrap();
        assert_eq!(
            cfg.vm("virtual1"),
            Some(&VmSpec {
                name: "virtual1".into(),
                reinstallable: false,
                os_profile: Some("sl4-32".into()),
                middleware: Some("ig_CE".into()),
            })
        );
    }

    #[test]
    fn comments_and_blank_lines_yield_empty_config() {
        let cfg = parse_hosts_def("# comment only\n\n").unwrap();
        assert!(cfg.hosts().is_empty());
    }

    #[test]
    fn accepts_crlf_tabs_and_trailing_comments() {
        let cfg = parse_hosts_def("PH\tphysic01\t10  \r\nVM vm1 1 sl4-64 # note\r\n").unwrap();
        assert_eq!(cfg.hosts().len(), 2);
        assert!(cfg.vm("vm1").unwrap().reinstallable);
        assert_eq!(cfg.vm("vm1").unwrap().middleware, None);
    }

    #[test]
    fn rejects_duplicate_names() {
        let err = parse_hosts_def("PH a 10\nPH a 5\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::DuplicateName {
                line: 2,
                name: "a".into()
            }
        );
    }

    #[test]
    fn rejects_unknown_kind() {
        let err = parse_hosts_def("XX a 10\n").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKind { line: 1, .. }));
    }

    #[test]
    fn rejects_non_numeric_third_column() {
        assert!(matches!(
            parse_hosts_def("PH a ten\n").unwrap_err(),
            ConfigError::InvalidNumber { line: 1, .. }
        ));
        assert!(matches!(
            parse_hosts_def("PH p 10\nVM v yes\n").unwrap_err(),
            ConfigError::InvalidNumber { line: 2, .. }
        ));
    }

    #[test]
    fn rejects_short_vm_row() {
        let err = parse_hosts_def("PH p 10\nVM v\n").unwrap_err();
        assert_eq!(err, ConfigError::MissingFields { line: 2, got: 2 });
    }

    #[test]
    fn rejects_vm_without_ph() {
        let err = parse_hosts_def("VM v 0\n").unwrap_err();
        assert_eq!(err, ConfigError::VmWithoutPh);
    }

    #[test]
    fn rejects_ambiguous_first_labels() {
        let err = parse_hosts_def("PH node.a.example 10\nPH node.b.example 10\n").unwrap_err();
        assert!(matches!(err, ConfigError::AmbiguousLabel { line: 2, .. }));
    }

    #[test]
    fn never_panics_on_arbitrary_bytes() {
        for junk in ["PH", "PH ;; 10", "VM x 1 2 3 4 5 6", "\u{0}\u{1}", "PH . 1"] {
            let _ = parse_hosts_def(junk);
        }
    }

    #[test]
    fn load_parse_truncates_at_hundredths() {
        assert_eq!(Load::parse("10"), Some(Load::from_hundredths(1000)));
        assert_eq!(Load::parse("1.55"), Some(Load::from_hundredths(155)));
        assert_eq!(Load::parse("1.15"), Some(Load::from_hundredths(115)));
        assert_eq!(Load::parse("10.009"), Some(Load::from_hundredths(1000)));
        assert_eq!(Load::parse(".5"), Some(Load::from_hundredths(50)));
        assert_eq!(Load::parse("2."), Some(Load::from_hundredths(200)));
        assert_eq!(Load::parse("-1"), None);
        assert_eq!(Load::parse(""), None);
        assert_eq!(Load::parse("."), None);
        assert_eq!(Load::parse("1.2.3"), None);
    }

    #[test]
    fn load_displays_two_decimals() {
        assert_eq!(Load::from_hundredths(155).to_string(), "1.55");
        assert_eq!(Load::from_hundredths(0).to_string(), "0.00");
        assert_eq!(Load::from_hundredths(1000).to_string(), "10.00");
    }

    #[test]
    fn serialize_empty_config_is_header_only() {
        let cfg = ClusterConfig::default();
        assert_eq!(
            serialize_hosts_def(&cfg),
            "# TYPE HOSTNAME MAXL INST OS MW\n"
        );
    }

    #[test]
    fn serialize_renders_whole_loads_without_decimals() {
        let cfg = parse_hosts_def("PH physic01 10\n").unwrap();
        assert_eq!(
            serialize_hosts_def(&cfg),
            "# TYPE HOSTNAME MAXL INST OS MW\nPH physic01 10\n"
        );
    }

    #[test]
    fn serialize_keeps_declaration_order() {
        let text = "PH physic01 10\nVM virtual1 0 sl4-32 ig_CE\nPH physic02 7.50\n";
        let cfg = parse_hosts_def(text).unwrap();
        let rendered = serialize_hosts_def(&cfg);
        assert_eq!(
            rendered,
            "# TYPE HOSTNAME MAXL INST OS MW\nPH physic01 10\nVM virtual1 0 sl4-32 ig_CE\nPH physic02 7.50\n"
        );
        assert_eq!(parse_hosts_def(&rendered).unwrap(), cfg);
    }
}
