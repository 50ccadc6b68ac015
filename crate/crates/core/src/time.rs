use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const SECONDS_PER_DAY: u64 = 86_400;

/// 2200-01-01T00:00:00Z, the end of the supported range.
pub const MAX_SECONDS: u64 = 7_258_118_400;

/// Seconds since 1970-01-01T00:00:00Z.
///
/// Text form is RFC 3339; the canonical rendering is `YYYY-MM-DDTHH:MM:SSZ`.
/// A bare date `YYYY-MM-DD` parses as midnight UTC.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Timestamp(u64);

impl Timestamp {
    pub fn from_secs(secs: u64) -> Result<Self> {
        if secs > MAX_SECONDS {
            return Err(Error::InvalidTimestamp(secs.to_string()));
        }
        Ok(Timestamp(secs))
    }

    pub fn secs(self) -> u64 {
        self.0
    }

    pub fn from_ymd(year: i32, month: u32, day: u32) -> Result<Self> {
        let date = NaiveDate::from_ymd_opt(year, month, day)
            .ok_or_else(|| Error::InvalidTimestamp(format!("{year}-{month}-{day}")))?;
        from_naive(date.and_hms_opt(0, 0, 0).expect("midnight exists"))
    }

    pub fn plus_days(self, days: u64) -> Result<Self> {
        let secs = days
            .checked_mul(SECONDS_PER_DAY)
            .and_then(|s| s.checked_add(self.0))
            .ok_or(Error::Overflow)?;
        Timestamp::from_secs(secs)
    }

    pub fn plus_secs(self, secs: u64) -> Result<Self> {
        Timestamp::from_secs(self.0.checked_add(secs).ok_or(Error::Overflow)?)
    }

    /// Whole days elapsed from `earlier` to `self`, floored; `None` if
    /// `self < earlier`.
    pub fn whole_days_since(self, earlier: Timestamp) -> Option<u64> {
        self.0.checked_sub(earlier.0).map(|s| s / SECONDS_PER_DAY)
    }

    /// Adds calendar months, clamping the day to the end of the target month.
    pub fn plus_months(self, months: u32) -> Result<Self> {
        let dt = DateTime::from_timestamp(self.0 as i64, 0)
            .ok_or(Error::Overflow)?
            .naive_utc();
        let next = dt
            .checked_add_months(chrono::Months::new(months))
            .ok_or(Error::Overflow)?;
        from_naive(next)
    }

    /// Parses and requires the canonical rendering.
    pub fn parse_canonical(s: &str) -> Result<Self> {
        let t: Timestamp = s.parse()?;
        if t.to_string() != s {
            return Err(Error::InvalidTimestamp(s.to_string()));
        }
        Ok(t)
    }
}

fn from_naive(dt: NaiveDateTime) -> Result<Timestamp> {
    let secs = dt.and_utc().timestamp();
    if secs < 0 {
        return Err(Error::InvalidTimestamp(dt.to_string()));
    }
    Timestamp::from_secs(secs as u64)
}

impl FromStr for Timestamp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
            return from_naive(dt.naive_utc());
        }
        if let Ok(date) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
            return from_naive(date.and_hms_opt(0, 0, 0).expect("midnight exists"));
        }
        Err(Error::InvalidTimestamp(s.to_string()))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dt = DateTime::from_timestamp(self.0 as i64, 0).expect("range checked on construction");
        write!(f, "{}", dt.format("%Y-%m-%dT%H:%M:%SZ"))
    }
}

impl fmt::Debug for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Timestamp({self})")
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        let a: Timestamp = "2023-03-06T00:00:00Z".parse().unwrap();
        let b: Timestamp = "2023-03-06".parse().unwrap();
        let c: Timestamp = "2023-03-06T02:00:00+02:00".parse().unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a.secs(), 1_678_060_800);
        assert_eq!(a.to_string(), "2023-03-06T00:00:00Z");
    }

    #[test]
    fn range_is_enforced() {
        assert!("1969-12-31T23:59:59Z".parse::<Timestamp>().is_err());
        assert!("2200-01-01T00:00:01Z".parse::<Timestamp>().is_err());
        assert!("2200-01-01T00:00:00Z".parse::<Timestamp>().is_ok());
        assert!(Timestamp::from_secs(MAX_SECONDS).unwrap().plus_days(1).is_err());
    }

    #[test]
    fn wish_span_is_3609_days() {
        let start = Timestamp::from_ymd(2023, 3, 6).unwrap();
        let end = Timestamp::from_ymd(2033, 1, 21).unwrap();
        assert_eq!(end.whole_days_since(start), Some(3609));
        assert_eq!(start.whole_days_since(end), None);
    }

    #[test]
    fn canonical_only() {
        assert!(Timestamp::parse_canonical("2023-03-06T00:00:00Z").is_ok());
        assert!(Timestamp::parse_canonical("2023-03-06t00:00:00z").is_err());
        assert!(Timestamp::parse_canonical("2023-03-06").is_err());
    }

    #[test]
    fn month_steps_clamp() {
        let t = Timestamp::from_ymd(2024, 1, 31).unwrap();
        assert_eq!(t.plus_months(1).unwrap(), Timestamp::from_ymd(2024, 2, 29).unwrap());
    }
}
