//! Half-hourly timestamps in local standard time.

use std::fmt;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike, Weekday};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Sampling interval of every series in the crate.
pub const STEP_MINUTES: i64 = 30;
/// Half-hour slots per day.
pub const SLOTS_PER_DAY: usize = 48;

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M";

/// Minutes since 1970-01-01T00:00 in the network's local standard time
/// (fixed offset, no daylight saving).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Instant(i64);

impl Instant {
    pub const fn from_epoch_minutes(minutes: i64) -> Self {
        Instant(minutes)
    }

    pub const fn epoch_minutes(self) -> i64 {
        self.0
    }

    pub fn from_datetime(dt: NaiveDateTime) -> Self {
        Instant(dt.and_utc().timestamp().div_euclid(60))
    }

    pub fn from_ymd_hm(year: i32, month: u32, day: u32, hour: u32, minute: u32) -> Self {
        let dt = NaiveDate::from_ymd_opt(year, month, day)
            .and_then(|d| d.and_hms_opt(hour, minute, 0))
            .expect("valid calendar date");
        Self::from_datetime(dt)
    }

    pub fn datetime(self) -> NaiveDateTime {
        chrono::DateTime::from_timestamp(self.0 * 60, 0)
            .expect("timestamp in chrono range")
            .naive_utc()
    }

    pub fn date(self) -> NaiveDate {
        self.datetime().date()
    }

    pub fn weekday(self) -> Weekday {
        self.date().weekday()
    }

    pub fn minute_of_day(self) -> u32 {
        let dt = self.datetime();
        dt.hour() * 60 + dt.minute()
    }

    /// Half-hour slot of the day, 0 for 00:00 up to 47 for 23:30.
    pub fn slot_of_day(self) -> usize {
        (self.minute_of_day() / STEP_MINUTES as u32) as usize
    }

    pub fn is_on_grid(self) -> bool {
        self.0.rem_euclid(STEP_MINUTES) == 0
    }

    pub fn plus_minutes(self, minutes: i64) -> Self {
        Instant(self.0 + minutes)
    }

    pub fn plus_steps(self, steps: i64) -> Self {
        Instant(self.0 + steps * STEP_MINUTES)
    }

    /// Parse `YYYY-MM-DDThh:mm`.
    pub fn parse(text: &str) -> Option<Self> {
        NaiveDateTime::parse_from_str(text.trim(), TIMESTAMP_FORMAT)
            .ok()
            .map(Self::from_datetime)
    }
}

impl fmt::Display for Instant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.datetime().format(TIMESTAMP_FORMAT))
    }
}

impl Serialize for Instant {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Instant {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Instant::parse(&text)
            .ok_or_else(|| serde::de::Error::custom(format!("bad timestamp `{text}`")))
    }
}

/// A time-of-day interval `[start, end)` in minutes after midnight. Wraps
/// past midnight when `end <= start`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeOfDayWindow {
    pub start_minute: u32,
    pub end_minute: u32,
}

impl TimeOfDayWindow {
    pub fn new(start_minute: u32, end_minute: u32) -> Self {
        TimeOfDayWindow { start_minute: start_minute % 1440, end_minute: end_minute % 1440 }
    }

    /// Parse a pair of `hh:mm` strings.
    pub fn parse(start: &str, end: &str) -> Option<Self> {
        Some(Self::new(parse_hm(start)?, parse_hm(end)?))
    }

    /// The off-peak hot-water span, 22:30 to 01:30.
    pub fn off_peak_uptick() -> Self {
        Self::new(22 * 60 + 30, 90)
    }

    pub fn is_empty(&self) -> bool {
        self.start_minute == self.end_minute
    }

    pub fn contains_minute(&self, minute: u32) -> bool {
        let m = minute % 1440;
        if self.start_minute <= self.end_minute {
            m >= self.start_minute && m < self.end_minute
        } else {
            m >= self.start_minute || m < self.end_minute
        }
    }

    pub fn contains(&self, t: Instant) -> bool {
        self.contains_minute(t.minute_of_day())
    }
}

fn parse_hm(text: &str) -> Option<u32> {
    let (h, m) = text.trim().split_once(':')?;
    let h: u32 = h.parse().ok()?;
    let m: u32 = m.parse().ok()?;
    (h < 24 && m < 60).then_some(h * 60 + m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        let t = Instant::parse("2016-01-15T13:30").unwrap();
        assert_eq!(t.to_string(), "2016-01-15T13:30");
        assert_eq!(t.slot_of_day(), 27);
        assert!(t.is_on_grid());
        assert_eq!(t.plus_steps(1).to_string(), "2016-01-15T14:00");
    }

    #[test]
    fn rejects_garbage() {
        assert!(Instant::parse("2016-13-01T00:00").is_none());
        assert!(Instant::parse("yesterday").is_none());
    }

    #[test]
    fn off_peak_window_wraps_midnight() {
        let w = TimeOfDayWindow::off_peak_uptick();
        assert!(w.contains_minute(22 * 60 + 30));
        assert!(w.contains_minute(0));
        assert!(w.contains_minute(60));
        assert!(!w.contains_minute(90));
        assert!(!w.contains_minute(22 * 60));
        assert!(TimeOfDayWindow::new(0, 0).is_empty());
    }
}
