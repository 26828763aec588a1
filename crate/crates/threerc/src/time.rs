//! Whole-second timestamps rendered as `YYYY-MM-DD/HH:MM:SS`.
//!
//! A [`Timestamp`] counts seconds since 1970-01-01/00:00:00 in the trace's
//! own frame of reference. Rendering uses a proleptic Gregorian calendar
//! and no time zone database, so log output is identical on every machine.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TimeError {
    #[error("invalid timestamp `{0}`: expected YYYY-MM-DD/HH:MM:SS")]
    Format(String),
    #[error("timestamp `{0}` has an out-of-range field")]
    Range(String),
}

/// Seconds since 1970-01-01/00:00:00, proleptic Gregorian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Timestamp(i64);

impl Timestamp {
    pub const EPOCH: Timestamp = Timestamp(0);

    pub fn from_secs(secs: i64) -> Self {
        Timestamp(secs)
    }

    pub fn secs(self) -> i64 {
        self.0
    }

    /// Whole minutes since the epoch (floor division, exact for negatives).
    pub fn minute_index(self) -> i64 {
        self.0.div_euclid(60)
    }

    pub fn from_civil(
        year: i64,
        month: u32,
        day: u32,
        hour: u32,
        minute: u32,
        second: u32,
    ) -> Result<Self, TimeError> {
        let txt = || format!("{year:04}-{month:02}-{day:02}/{hour:02}:{minute:02}:{second:02}");
        if !(1..=12).contains(&month) || hour > 23 || minute > 59 || second > 59 {
            return Err(TimeError::Range(txt()));
        }
        if day < 1 || day > days_in_month(year, month) {
            return Err(TimeError::Range(txt()));
        }
        let days = days_from_civil(year, month, day);
        Ok(Timestamp(
            days * 86_400 + i64::from(hour) * 3_600 + i64::from(minute) * 60 + i64::from(second),
        ))
    }

    fn civil(self) -> (i64, u32, u32, u32, u32, u32) {
        let days = self.0.div_euclid(86_400);
        let rem = self.0.rem_euclid(86_400);
        let (y, m, d) = civil_from_days(days);
        let hour = (rem / 3_600) as u32;
        let minute = (rem % 3_600 / 60) as u32;
        let second = (rem % 60) as u32;
        (y, m, d, hour, minute, second)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (y, m, d, hh, mm, ss) = self.civil();
        write!(f, "{y:04}-{m:02}-{d:02}/{hh:02}:{mm:02}:{ss:02}")
    }
}

impl FromStr for Timestamp {
    type Err = TimeError;

    /// Strict parse of the fixed-width `YYYY-MM-DD/HH:MM:SS` layout.
    fn from_str(s: &str) -> Result<Self, TimeError> {
        let b = s.as_bytes();
        if b.len() != 19
            || b[4] != b'-'
            || b[7] != b'-'
            || b[10] != b'/'
            || b[13] != b':'
            || b[16] != b':'
        {
            return Err(TimeError::Format(s.to_string()));
        }
        let num = |range: std::ops::Range<usize>| -> Result<i64, TimeError> {
            let chunk = &s[range];
            if !chunk.bytes().all(|c| c.is_ascii_digit()) {
                return Err(TimeError::Format(s.to_string()));
            }
            chunk.parse().map_err(|_| TimeError::Format(s.to_string()))
        };
        Timestamp::from_civil(
            num(0..4)?,
            num(5..7)? as u32,
            num(8..10)? as u32,
            num(11..13)? as u32,
            num(14..16)? as u32,
            num(17..19)? as u32,
        )
    }
}

fn is_leap(year: i64) -> bool {
    year % 4 == 0 && (year % 100 != 0 || year % 400 == 0)
}

fn days_in_month(year: i64, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap(year) => 29,
        2 => 28,
        _ => 0,
    }
}

// Civil <-> day-count conversions for the proleptic Gregorian calendar,
// era-based to stay exact over negative day counts.
fn days_from_civil(y: i64, m: u32, d: u32) -> i64 {
    let y = y - i64::from(m <= 2);
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let m = i64::from(m);
    let d = i64::from(d);
    let doy = (153 * (if m > 2 { m - 3 } else { m + 9 }) + 2) / 5 + d - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1_460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = (if mp < 10 { mp + 3 } else { mp - 9 }) as u32;
    (y + i64::from(m <= 2), m, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_known_instants() {
        assert_eq!(Timestamp::from_secs(0).to_string(), "1970-01-01/00:00:00");
        assert_eq!(
            Timestamp::from_secs(1_229_229_061).to_string(),
            "2008-12-14/04:31:01"
        );
        assert_eq!(
            Timestamp::from_secs(946_684_800).to_string(),
            "2000-01-01/00:00:00"
        );
    }

    #[test]
    fn parses_known_instants() {
        assert_eq!(
            "2008-12-13/13:12:01".parse::<Timestamp>().unwrap().secs(),
            1_229_173_921
        );
        assert_eq!(
            "2008-01-01/00:00:00".parse::<Timestamp>().unwrap().secs(),
            1_199_145_600
        );
    }

    #[test]
    fn rejects_malformed_text() {
        for bad in [
            "2008-12-14 04:31:01",
            "2008-12-14/04:31",
            "2008-13-01/00:00:00",
            "2008-02-30/00:00:00",
            "2008-12-14/24:00:00",
            "08-12-14/04:31:01",
            "2008-12-14/04:31:0a",
            "",
        ] {
            assert!(bad.parse::<Timestamp>().is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn leap_day_round_trips() {
        let ts = "2008-02-29/23:59:59".parse::<Timestamp>().unwrap();
        assert_eq!(ts.to_string(), "2008-02-29/23:59:59");
        assert!("2007-02-29/00:00:00".parse::<Timestamp>().is_err());
    }

    #[test]
    fn minute_index_is_floor_division() {
        assert_eq!(Timestamp::from_secs(119).minute_index(), 1);
        assert_eq!(Timestamp::from_secs(120).minute_index(), 2);
        assert_eq!(Timestamp::from_secs(-1).minute_index(), -1);
    }

    #[test]
    fn round_trips_across_years() {
        // One probe per month across a leap and a non-leap year.
        for year in [1999i64, 2008] {
            for month in 1..=12u32 {
                let ts = Timestamp::from_civil(year, month, 17, 5, 4, 3).unwrap();
                assert_eq!(ts.to_string().parse::<Timestamp>().unwrap(), ts);
            }
        }
    }
}
