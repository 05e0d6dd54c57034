//! Calendar features of a posting time and the likes-rate response.

use std::collections::BTreeSet;

use chrono::{DateTime, Datelike, FixedOffset, NaiveDate, Timelike, Weekday};
use serde::{Deserialize, Serialize};

pub const SECONDS_PER_DAY: f64 = 86_400.0;
/// Offset added to the time difference (days) in the response denominator.
pub const DEFAULT_RESPONSE_OFFSET: f64 = 5.0;
pub const N_HOUR_BINS: usize = 8;

/// Hour-bin column suffixes, `[0, 3)` through `[21, 24)`.
pub const HOUR_BIN_NAMES: [&str; N_HOUR_BINS] = [
    "00_03", "03_06", "06_09", "09_12", "12_15", "15_18", "18_21", "21_24",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Season {
    Spring,
    Summer,
    Fall,
    Winter,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Spring, Season::Summer, Season::Fall, Season::Winter];

    /// Spring = Mar-May, Summer = Jun-Aug, Fall = Sep-Nov, Winter = Dec-Feb.
    pub fn of_month(month: u32) -> Season {
        match month {
            3..=5 => Season::Spring,
            6..=8 => Season::Summer,
            9..=11 => Season::Fall,
            _ => Season::Winter,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Season::Spring => "spring",
            Season::Summer => "summer",
            Season::Fall => "fall",
            Season::Winter => "winter",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeFeatures {
    /// 1 for Monday to Friday.
    pub weekdays: u8,
    /// Three-hour bin of the local posting time, 0..8.
    pub hour_bin: usize,
    pub season: Season,
    pub holiday: u8,
    /// Hours since the same user's previous post; `None` for a first post.
    pub period_hours: Option<f64>,
}

impl TimeFeatures {
    pub fn hour_one_hot(&self) -> [u8; N_HOUR_BINS] {
        let mut v = [0; N_HOUR_BINS];
        v[self.hour_bin] = 1;
        v
    }

    pub fn season_one_hot(&self) -> [u8; 4] {
        let mut v = [0; 4];
        v[self.season.index()] = 1;
        v
    }
}

/// Local wall-clock time of a UTC timestamp under a fixed offset.
pub fn local_time(ts: i64, tz_offset_secs: i32) -> DateTime<FixedOffset> {
    let tz = FixedOffset::east_opt(tz_offset_secs).expect("offset within a day");
    DateTime::from_timestamp(ts, 0)
        .expect("timestamp in range")
        .with_timezone(&tz)
}

pub fn local_date(ts: i64, tz_offset_secs: i32) -> NaiveDate {
    local_time(ts, tz_offset_secs).date_naive()
}

pub fn time_features(
    posted_at: i64,
    prev_posted_at: Option<i64>,
    holidays: &BTreeSet<NaiveDate>,
    tz_offset_secs: i32,
) -> TimeFeatures {
    let t = local_time(posted_at, tz_offset_secs);
    let weekdays = u8::from(!matches!(t.weekday(), Weekday::Sat | Weekday::Sun));
    TimeFeatures {
        weekdays,
        hour_bin: (t.hour() / 3) as usize,
        season: Season::of_month(t.month()),
        holiday: u8::from(holidays.contains(&t.date_naive())),
        period_hours: prev_posted_at.map(|p| (posted_at - p) as f64 / 3600.0),
    }
}

/// Time difference between crawling and posting, in days.
pub fn time_difference_days(posted_at: i64, crawled_at: i64) -> f64 {
    (crawled_at - posted_at) as f64 / SECONDS_PER_DAY
}

/// `ln(max(likes, 1) / (time_difference_days + c))`.
pub fn response_transform(like_count: i64, posted_at: i64, crawled_at: i64, c: f64) -> f64 {
    let likes = like_count.max(1) as f64;
    (likes / (time_difference_days(posted_at, crawled_at) + c)).ln()
}
