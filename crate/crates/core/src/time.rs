//! Second-precision UTC instants and closed time intervals.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, NaiveTime, Utc};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid timestamp {0:?}")]
pub struct TimestampError(pub String);

/// Seconds since the Unix epoch, UTC.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(i64);

impl Timestamp {
    pub const fn from_unix(seconds: i64) -> Self {
        Timestamp(seconds)
    }

    pub fn unix(self) -> i64 {
        self.0
    }

    pub fn now() -> Self {
        Timestamp(Utc::now().timestamp())
    }

    /// Parses an `xsd:dateTime` / RFC 3339 lexical form. Values without an
    /// offset are UTC; fractional seconds are truncated.
    pub fn parse(text: &str) -> Result<Self, TimestampError> {
        let text = text.trim();
        let err = || TimestampError(text.to_string());
        if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
            return Ok(Timestamp(dt.timestamp()));
        }
        let naive = NaiveDateTime::parse_from_str(text, "%Y-%m-%dT%H:%M:%S%.f").map_err(|_| err())?;
        Ok(Timestamp(naive.and_utc().timestamp()))
    }

    /// Like [`Timestamp::parse`], but a bare `YYYY-MM-DD` is accepted and
    /// expands to the first (or, with `end_of_day`, the last) second of that day.
    pub fn parse_flexible(text: &str, end_of_day: bool) -> Result<Self, TimestampError> {
        if let Ok(date) = NaiveDate::parse_from_str(text.trim(), "%Y-%m-%d") {
            let time = if end_of_day {
                NaiveTime::from_hms_opt(23, 59, 59)
            } else {
                NaiveTime::from_hms_opt(0, 0, 0)
            };
            let time = time.ok_or_else(|| TimestampError(text.to_string()))?;
            return Ok(Timestamp(date.and_time(time).and_utc().timestamp()));
        }
        Timestamp::parse(text)
    }

    /// RFC 3339 in UTC, e.g. `2021-10-19T19:55:55Z`.
    pub fn to_rfc3339(self) -> String {
        format!("{self}Z")
    }

    fn to_datetime(self) -> Option<DateTime<Utc>> {
        DateTime::from_timestamp(self.0, 0)
    }
}

/// `YYYY-MM-DDTHH:MM:SS`, the form used by the provenance data.
impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_datetime() {
            Some(dt) => write!(f, "{}", dt.format("%Y-%m-%dT%H:%M:%S")),
            None => write!(f, "@{}", self.0),
        }
    }
}

impl fmt::Debug for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Timestamp {
    type Err = TimestampError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Timestamp::parse(s)
    }
}

/// A closed interval `[start, end]`; a missing bound is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TimeInterval {
    pub start: Option<Timestamp>,
    pub end: Option<Timestamp>,
}

impl TimeInterval {
    pub const UNBOUNDED: TimeInterval = TimeInterval { start: None, end: None };

    pub fn new(start: Option<Timestamp>, end: Option<Timestamp>) -> Result<Self, TimestampError> {
        if let (Some(s), Some(e)) = (start, end) {
            if s > e {
                return Err(TimestampError(format!("interval start {s} is after end {e}")));
            }
        }
        Ok(TimeInterval { start, end })
    }

    pub fn instant(t: Timestamp) -> Self {
        TimeInterval {
            start: Some(t),
            end: Some(t),
        }
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        self.start.is_none_or(|s| s <= t) && self.end.is_none_or(|e| t <= e)
    }

    /// Whether `[from, until)` (with `until = None` meaning open-ended) meets this interval.
    pub fn overlaps_validity(&self, from: Timestamp, until: Option<Timestamp>) -> bool {
        let before_end = self.end.is_none_or(|e| from <= e);
        let after_start = match (self.start, until) {
            (Some(s), Some(u)) => s < u,
            _ => true,
        };
        before_end && after_start
    }
}
