//! Status feed consumed by the controller.
//!
//! The monitor publishes one line per host, `hostname;load;last_ping;`,
//! carrying the 5-minute load average and the seconds elapsed since the
//! last heartbeat. A `last_ping` of 9999 marks the host as dead; an
//! unreported host is treated the same way.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::cluster::{short_label, ClusterConfig, Load};
use crate::time::Timestamp;

/// Heartbeat sentinel: the host has been declared dead.
pub const DEAD_PING: u32 = 9999;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeedError {
    #[error("line {line}: malformed feed line `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: duplicate host `{host}` in feed")]
    Duplicate { line: usize, host: String },
    #[error("feed lines `{a}` and `{b}` both match config host `{config_host}`")]
    AmbiguousMatch {
        config_host: String,
        a: String,
        b: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonitorSample {
    host: String,
    load: Load,
    last_ping: u32,
}

impl MonitorSample {
    /// Heartbeat ages at or past the sentinel collapse to it: a host that
    /// silent for that long is indistinguishable from a dead one.
    pub fn new(host: impl Into<String>, load: Load, last_ping: u32) -> Self {
        MonitorSample {
            host: host.into(),
            load,
            last_ping: last_ping.min(DEAD_PING),
        }
    }

    pub fn dead(host: impl Into<String>) -> Self {
        MonitorSample::new(host, Load::from_hundredths(0), DEAD_PING)
    }

    pub fn host(&self) -> &str {
        &self.host
    }

    pub fn load(&self) -> Load {
        self.load
    }

    pub fn last_ping(&self) -> u32 {
        self.last_ping
    }
}

/// True iff the heartbeat carries the dead sentinel.
pub fn is_dead(sample: &MonitorSample) -> bool {
    sample.last_ping == DEAD_PING
}

/// All samples the monitor published at one instant, feed order preserved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonitorSnapshot {
    pub taken_at: Timestamp,
    pub samples: Vec<MonitorSample>,
}

impl MonitorSnapshot {
    pub fn new(taken_at: Timestamp, samples: Vec<MonitorSample>) -> Self {
        MonitorSnapshot { taken_at, samples }
    }
}

/// Parses feed text. The feed itself carries no clock, so the caller
/// supplies the instant the snapshot was taken.
pub fn parse_status_feed(text: &str, taken_at: Timestamp) -> Result<MonitorSnapshot, FeedError> {
    let mut samples: Vec<MonitorSample> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let malformed = || FeedError::Malformed {
            line: line_no,
            text: raw.to_string(),
        };
        let fields: Vec<&str> = line.split(';').collect();
        // `name;load;ping;` splits into four pieces, the last empty.
        let ok_arity = fields.len() == 3 || (fields.len() == 4 && fields[3].is_empty());
        if !ok_arity || fields[0].is_empty() {
            return Err(malformed());
        }
        let load = Load::parse(fields[1]).ok_or_else(malformed)?;
        if !fields[2].bytes().all(|b| b.is_ascii_digit()) || fields[2].is_empty() {
            return Err(malformed());
        }
        let ping: u32 = fields[2].parse().map_err(|_| malformed())?;
        if samples.iter().any(|s| s.host == fields[0]) {
            return Err(FeedError::Duplicate {
                line: line_no,
                host: fields[0].to_string(),
            });
        }
        samples.push(MonitorSample::new(fields[0], load, ping));
    }
    Ok(MonitorSnapshot { taken_at, samples })
}

/// Renders a snapshot back to feed text: two-decimal loads, a trailing
/// `;` on every line. `parse_status_feed(render_status_feed(s), s.taken_at)`
/// gives back `s`.
pub fn render_status_feed(snapshot: &MonitorSnapshot) -> String {
    let mut out = String::new();
    for sample in &snapshot.samples {
        out.push_str(&sample.host);
        out.push(';');
        out.push_str(&sample.load.to_string());
        out.push(';');
        out.push_str(&sample.last_ping.to_string());
        out.push_str(";\n");
    }
    out
}

/// The snapshot resolved against a cluster config.
///
/// Feed names are FQDNs while `hosts.def` uses short names; matching is by
/// first DNS label and must be unambiguous. A config host missing from the
/// feed is synthesized as dead.
#[derive(Debug)]
pub struct HostStatusView {
    by_config_name: BTreeMap<String, MonitorSample>,
    dead_order: Vec<String>,
}

impl HostStatusView {
    pub fn resolve(
        snapshot: &MonitorSnapshot,
        config: &ClusterConfig,
    ) -> Result<HostStatusView, FeedError> {
        let mut by_config_name: BTreeMap<String, MonitorSample> = BTreeMap::new();
        let mut matched_line: BTreeMap<String, String> = BTreeMap::new();
        let mut dead_order = Vec::new();
        for sample in &snapshot.samples {
            let label = short_label(&sample.host);
            let Some(host) = config
                .hosts()
                .iter()
                .find(|h| short_label(h.name()) == label)
            else {
                continue; // not under HA control
            };
            let name = host.name().to_string();
            if let Some(prev) = matched_line.get(&name) {
                return Err(FeedError::AmbiguousMatch {
                    config_host: name,
                    a: prev.clone(),
                    b: sample.host.clone(),
                });
            }
            matched_line.insert(name.clone(), sample.host.clone());
            if is_dead(sample) {
                dead_order.push(name.clone());
            }
            by_config_name.insert(name, sample.clone());
        }
        // Unreported hosts come last, in declaration order.
        for host in config.hosts() {
            if !by_config_name.contains_key(host.name()) {
                by_config_name.insert(host.name().to_string(), MonitorSample::dead(host.name()));
                dead_order.push(host.name().to_string());
            }
        }
        Ok(HostStatusView {
            by_config_name,
            dead_order,
        })
    }

    /// Sample for a config host; total by construction.
    pub fn sample(&self, config_name: &str) -> Option<&MonitorSample> {
        self.by_config_name.get(config_name)
    }

    /// Config names of dead hosts: feed order first, then synthesized ones.
    pub fn dead_hosts(&self) -> impl Iterator<Item = &str> {
        self.dead_order.iter().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::parse_hosts_def;

    fn snap(text: &str) -> MonitorSnapshot {
        parse_status_feed(text, Timestamp::EPOCH).unwrap()
    }

    #[test]
    fn parses_live_sample() {
        let s = snap("gridce.sns.it;1.55;15;\n");
        assert_eq!(
            s.samples,
            vec![MonitorSample::new(
                "gridce.sns.it",
                Load::from_hundredths(155),
                15
            )]
        );
        assert!(!is_dead(&s.samples[0]));
    }

    #[test]
    fn parses_dead_sample() {
        let s = snap("vrt1.sns.it;0.00;9999;\n");
        assert!(is_dead(&s.samples[0]));
    }

    #[test]
    fn empty_feed_is_empty_snapshot() {
        assert!(snap("").samples.is_empty());
    }

    #[test]
    fn ping_at_or_past_sentinel_is_dead() {
        let s = snap("v;0.00;12000;\n");
        assert_eq!(s.samples[0].last_ping(), DEAD_PING);
        assert!(is_dead(&s.samples[0]));
        assert!(!is_dead(&snap("v;0.00;0;\n").samples[0]));
    }

    #[test]
    fn rejects_malformed_lines_with_line_number() {
        for (text, line) in [
            ("a;1.0;\n", 1),
            ("ok;0.00;3;\nb;x;5;\n", 2),
            ("a;1.0;-2;\n", 1),
            (";1.0;5;\n", 1),
            ("a;1.0;5;extra;\n", 1),
        ] {
            match parse_status_feed(text, Timestamp::EPOCH) {
                Err(FeedError::Malformed { line: l, .. }) => assert_eq!(l, line),
                other => panic!("expected malformed error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn rejects_duplicate_feed_host() {
        let err = parse_status_feed("a;1.00;5;\na;2.00;5;\n", Timestamp::EPOCH).unwrap_err();
        assert!(matches!(err, FeedError::Duplicate { line: 2, .. }));
    }

    #[test]
    fn renders_expected_line() {
        let s = MonitorSnapshot::new(
            Timestamp::EPOCH,
            vec![MonitorSample::new(
                "alfa01.sns.it",
                Load::from_hundredths(294),
                25,
            )],
        );
        assert_eq!(render_status_feed(&s), "alfa01.sns.it;2.94;25;\n");
    }

    #[test]
    fn render_parse_round_trip() {
        let s = MonitorSnapshot::new(
            Timestamp::from_secs(77),
            vec![
                MonitorSample::new("a.example.org", Load::from_hundredths(0), DEAD_PING),
                MonitorSample::new("b", Load::from_hundredths(574), 21),
            ],
        );
        assert_eq!(
            parse_status_feed(&render_status_feed(&s), s.taken_at).unwrap(),
            s
        );
        assert_eq!(
            render_status_feed(&MonitorSnapshot::new(s.taken_at, vec![])),
            ""
        );
    }

    #[test]
    fn view_matches_fqdn_to_short_name_and_synthesizes_dead() {
        let config = parse_hosts_def("PH alfa01 10\nVM gridce 0\nVM vrt1 1 sl4-32\n").unwrap();
        let s = snap("alfa01.sns.it;2.94;25;\ngridce.sns.it;0.00;9999;\nstray.sns.it;1.00;5;\n");
        let view = HostStatusView::resolve(&s, &config).unwrap();
        assert_eq!(view.sample("alfa01").unwrap().last_ping(), 25);
        assert!(is_dead(view.sample("gridce").unwrap()));
        // vrt1 absent from the feed: synthesized dead, after feed-ordered deads.
        let dead: Vec<&str> = view.dead_hosts().collect();
        assert_eq!(dead, vec!["gridce", "vrt1"]);
        assert_eq!(
            view.sample("vrt1").unwrap().load(),
            Load::from_hundredths(0)
        );
    }

    #[test]
    fn view_rejects_two_lines_for_one_config_host() {
        let config = parse_hosts_def("PH alfa01 10\n").unwrap();
        let s = snap("alfa01.sns.it;1.00;5;\nalfa01.other.net;2.00;5;\n");
        assert!(matches!(
            HostStatusView::resolve(&s, &config),
            Err(FeedError::AmbiguousMatch { .. })
        ));
    }
}
