//! Timestamps, periods and period sets.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, Utc};

use super::MotionError;

const ISO_FORMAT: &str = "%Y-%m-%dT%H:%M:%S%.3fZ";

/// Milliseconds since the Unix epoch, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub const fn from_millis(ms: i64) -> Self {
        Timestamp(ms)
    }

    pub const fn millis(self) -> i64 {
        self.0
    }

    /// Seconds elapsed from `earlier` to `self`.
    pub fn seconds_since(self, earlier: Timestamp) -> f64 {
        (self.0 - earlier.0) as f64 / 1000.0
    }

    pub fn plus_millis(self, ms: i64) -> Timestamp {
        Timestamp(self.0 + ms)
    }

    pub fn parse_iso(text: &str) -> Result<Self, MotionError> {
        let t = text.trim();
        if let Ok(dt) = DateTime::parse_from_rfc3339(t) {
            return Ok(Timestamp(dt.timestamp_millis()));
        }
        // tolerate a missing zone designator, read as UTC
        NaiveDateTime::parse_from_str(t, "%Y-%m-%dT%H:%M:%S%.f")
            .map(|n| Timestamp(n.and_utc().timestamp_millis()))
            .map_err(|_| MotionError::BadTimestamp(text.to_string()))
    }

    pub fn to_iso(self) -> String {
        match DateTime::<Utc>::from_timestamp_millis(self.0) {
            Some(dt) => dt.format(ISO_FORMAT).to_string(),
            None => format!("{}ms", self.0),
        }
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_iso())
    }
}

impl FromStr for Timestamp {
    type Err = MotionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Timestamp::parse_iso(s)
    }
}

/// Half-open time interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Period {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl Period {
    pub fn new(start: Timestamp, end: Timestamp) -> Result<Self, MotionError> {
        if start >= end {
            return Err(MotionError::EmptyPeriod(start, end));
        }
        Ok(Period { start, end })
    }

    pub fn millis(&self) -> i64 {
        self.end.0 - self.start.0
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t < self.end
    }

    /// Overlap with `[a, b)`, if non-empty.
    pub fn clip(&self, a: Timestamp, b: Timestamp) -> Option<(Timestamp, Timestamp)> {
        let s = self.start.max(a);
        let e = self.end.min(b);
        (s < e).then_some((s, e))
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PERIOD({},{})", self.start, self.end)
    }
}

/// Sorted, disjoint, coalesced set of periods.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Periods(Vec<Period>);

impl Periods {
    pub fn empty() -> Self {
        Periods(Vec::new())
    }

    /// Normalizes an arbitrary collection: sorts, merges overlapping and
    /// touching periods.
    pub fn from_periods(mut items: Vec<Period>) -> Self {
        items.sort_by_key(|p| (p.start, p.end));
        let mut out: Vec<Period> = Vec::with_capacity(items.len());
        for p in items {
            match out.last_mut() {
                Some(last) if p.start <= last.end => last.end = last.end.max(p.end),
                _ => out.push(p),
            }
        }
        Periods(out)
    }

    pub fn single(p: Period) -> Self {
        Periods(vec![p])
    }

    pub fn as_slice(&self) -> &[Period] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        let i = self.0.partition_point(|p| p.end <= t);
        self.0.get(i).is_some_and(|p| p.contains(t))
    }

    pub fn total_millis(&self) -> i64 {
        self.0.iter().map(Period::millis).sum()
    }
}

impl fmt::Display for Periods {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("PERIODS()");
        }
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(secs: i64) -> Timestamp {
        Timestamp(secs * 1000)
    }

    #[test]
    fn iso_round_trip() {
        let t = Timestamp::parse_iso("2011-01-21T00:04:42.600Z").unwrap();
        assert_eq!(t.to_iso(), "2011-01-21T00:04:42.600Z");
        assert_eq!(Timestamp::parse_iso("2011-01-21T00:04:42.6").unwrap(), t);
        assert_eq!(Timestamp(0).to_iso(), "1970-01-01T00:00:00.000Z");
        assert!(Timestamp::parse_iso("21.01.2011 00:04:42:600").is_err());
    }

    #[test]
    fn periods_coalesce() {
        let p = Periods::from_periods(vec![
            Period::new(s(30), s(40)).unwrap(),
            Period::new(s(10), s(20)).unwrap(),
            Period::new(s(0), s(10)).unwrap(),
        ]);
        assert_eq!(
            p.as_slice(),
            &[Period::new(s(0), s(20)).unwrap(), Period::new(s(30), s(40)).unwrap()]
        );
        assert!(p.contains(s(19)));
        assert!(!p.contains(s(20)));
        assert!(p.contains(s(30)));
        assert_eq!(p.total_millis(), 30_000);
        assert!(Period::new(s(3), s(3)).is_err());
    }
}
