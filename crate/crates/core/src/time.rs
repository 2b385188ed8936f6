//! Timestamps and the working calendar.
//!
//! All instants are UTC milliseconds since the Unix epoch. The calendar maps
//! between wall-clock instants and "worked" time, i.e. time that only advances
//! inside the daily working window on working weekdays.

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// UTC instant in milliseconds.
pub type Timestamp = i64;

pub const MS_PER_MINUTE: i64 = 60_000;
pub const MS_PER_HOUR: i64 = 3_600_000;
pub const MS_PER_DAY: i64 = 86_400_000;

/// Parse a timestamp. With `format == None` ISO-8601 / RFC 3339 is accepted,
/// with or without offset, as well as plain dates (midnight UTC).
pub fn parse_timestamp(s: &str, format: Option<&str>) -> Option<Timestamp> {
    let s = s.trim();
    if let Some(fmt) = format {
        if let Ok(dt) = DateTime::parse_from_str(s, fmt) {
            return Some(dt.timestamp_millis());
        }
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.and_utc().timestamp_millis());
        }
        return NaiveDate::parse_from_str(s, fmt)
            .ok()
            .and_then(|d| d.and_hms_opt(0, 0, 0))
            .map(|dt| dt.and_utc().timestamp_millis());
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp_millis());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.and_utc().timestamp_millis());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|dt| dt.and_utc().timestamp_millis())
}

/// Canonical ISO-8601 rendering with millisecond precision.
pub fn format_timestamp(ts: Timestamp) -> String {
    match Utc.timestamp_millis_opt(ts).single() {
        Some(dt) => dt.format("%Y-%m-%dT%H:%M:%S%.3fZ").to_string(),
        None => ts.to_string(),
    }
}

pub fn datetime(ts: Timestamp) -> DateTime<Utc> {
    Utc.timestamp_millis_opt(ts)
        .single()
        .unwrap_or(DateTime::<Utc>::MIN_UTC)
}

fn day_index(ts: Timestamp) -> i64 {
    ts.div_euclid(MS_PER_DAY)
}

/// Weekday of a day index (days since epoch), Monday = 0.
fn weekday_of_day(day: i64) -> usize {
    // 1970-01-01 was a Thursday.
    ((day + 3).rem_euclid(7)) as usize
}

/// Daily working window on a set of weekdays.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Calendar {
    /// Minutes after midnight when work starts.
    pub day_start_minute: u32,
    /// Minutes after midnight when work stops.
    pub day_end_minute: u32,
    /// Working weekdays, Monday first.
    pub workdays: [bool; 7],
}

impl Default for Calendar {
    fn default() -> Self {
        Calendar {
            day_start_minute: 8 * 60,
            day_end_minute: 17 * 60,
            workdays: [true, true, true, true, true, false, false],
        }
    }
}

/// Which side of a day boundary an instant at the end of the working window
/// maps to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// End of one day's window stays at closing time.
    Closing,
    /// End of one day's window maps to the next opening time.
    Opening,
}

impl Calendar {
    pub fn validate(&self) -> Result<()> {
        if self.day_start_minute >= self.day_end_minute || self.day_end_minute > 24 * 60 {
            return Err(Error::Config("calendar window must satisfy start < end <= 24h".into()));
        }
        if !self.workdays.iter().any(|d| *d) {
            return Err(Error::Config("calendar has no working day".into()));
        }
        Ok(())
    }

    pub fn window_ms(&self) -> i64 {
        (self.day_end_minute - self.day_start_minute) as i64 * MS_PER_MINUTE
    }

    fn is_workday(&self, day: i64) -> bool {
        self.workdays[weekday_of_day(day)]
    }

    fn open(&self, day: i64) -> Timestamp {
        day * MS_PER_DAY + self.day_start_minute as i64 * MS_PER_MINUTE
    }

    fn close(&self, day: i64) -> Timestamp {
        day * MS_PER_DAY + self.day_end_minute as i64 * MS_PER_MINUTE
    }

    /// True when `ts` lies inside a working window (both ends inclusive).
    pub fn contains(&self, ts: Timestamp) -> bool {
        let day = day_index(ts);
        self.is_workday(day) && ts >= self.open(day) && ts <= self.close(day)
    }

    /// Worked milliseconds inside `[a, b]`.
    pub fn worked_between(&self, a: Timestamp, b: Timestamp) -> i64 {
        if b <= a {
            return 0;
        }
        let (da, db) = (day_index(a), day_index(b));
        let per_day = self.window_ms();
        let mut total = 0;
        let mut day = da;
        while day <= db {
            if self.is_workday(day) {
                if day > da && day < db {
                    total += per_day;
                } else {
                    let lo = a.max(self.open(day));
                    let hi = b.min(self.close(day));
                    if hi > lo {
                        total += hi - lo;
                    }
                }
            }
            day += 1;
        }
        total
    }

    /// First working day on or after the day containing `ts`.
    fn first_workday_from(&self, day: i64) -> i64 {
        let mut d = day;
        while !self.is_workday(d) {
            d += 1;
        }
        d
    }

    /// Clock anchored at the opening of the first working day on or after `origin`.
    pub fn clock(&self, origin: Timestamp) -> WorkClock {
        let first_day = self.first_workday_from(day_index(origin));
        let workdays_per_week = self.workdays.iter().filter(|d| **d).count() as i64;
        WorkClock {
            calendar: self.clone(),
            first_day,
            workdays_per_week,
        }
    }
}

/// Maps worked time (milliseconds since the clock origin) to wall-clock instants.
#[derive(Debug, Clone)]
pub struct WorkClock {
    calendar: Calendar,
    first_day: i64,
    workdays_per_week: i64,
}

impl WorkClock {
    pub fn origin(&self) -> Timestamp {
        self.calendar.open(self.first_day)
    }

    fn nth_workday(&self, n: i64) -> i64 {
        // whole weeks first, then walk the remainder
        let weeks = n / self.workdays_per_week;
        let mut rest = n % self.workdays_per_week;
        let mut day = self.first_day + weeks * 7;
        while rest > 0 {
            day += 1;
            if self.calendar.is_workday(day) {
                rest -= 1;
            }
        }
        self.calendar.first_workday_from(day)
    }

    pub fn wall(&self, worked: i64, boundary: Boundary) -> Timestamp {
        let window = self.calendar.window_ms();
        let mut n = worked.div_euclid(window);
        let mut offset = worked.rem_euclid(window);
        if offset == 0 && n > 0 && boundary == Boundary::Closing {
            n -= 1;
            offset = window;
        }
        self.calendar.open(self.nth_workday(n)) + offset
    }
}

/// Calendar year of an instant.
pub fn year_of(ts: Timestamp) -> i64 {
    datetime(ts).year() as i64
}

pub fn month_of(ts: Timestamp) -> i64 {
    datetime(ts).month() as i64
}
