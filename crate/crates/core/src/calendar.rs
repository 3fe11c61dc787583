use core::fmt;

use serde::{Deserialize, Serialize};

/// Minutes per environment step.
pub const STEP_MINUTES: u32 = 5;
/// Steps in one day: 24 * 60 / 5.
pub const STEPS_PER_DAY: usize = (24 * 60 / STEP_MINUTES) as usize;
/// Step duration in hours.
pub const STEP_HOURS: f64 = STEP_MINUTES as f64 / 60.0;

/// Wall-clock start of a scenario (no time zone).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StartTime {
    pub year: i32,
    pub month: u8,
    pub day: u8,
    pub hour: u8,
    pub minute: u8,
}

impl Default for StartTime {
    /// A Monday in early February, when demand is high.
    fn default() -> Self {
        Self { year: 2022, month: 2, day: 7, hour: 0, minute: 0 }
    }
}

fn is_leap(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

fn days_in_month(year: i32, month: u8) -> u8 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap(year) => 29,
        2 => 28,
        _ => 0,
    }
}

impl StartTime {
    pub fn is_valid(&self) -> bool {
        (1..=12).contains(&self.month)
            && self.day >= 1
            && self.day <= days_in_month(self.year, self.month)
            && self.hour < 24
            && self.minute < 60
    }

    /// Zero-based day of the year.
    pub fn day_of_year(&self) -> u32 {
        (1..self.month).map(|m| days_in_month(self.year, m) as u32).sum::<u32>() + self.day as u32 - 1
    }

    pub fn minute_of_day(&self) -> u32 {
        self.hour as u32 * 60 + self.minute as u32
    }

    /// 0 = Monday.
    pub fn weekday(&self) -> u32 {
        // Days since 1970-01-01 (a Thursday) via the civil-from-days inverse.
        let (y, m) = if self.month <= 2 {
            (self.year as i64 - 1, self.month as i64 + 9)
        } else {
            (self.year as i64, self.month as i64 - 3)
        };
        let era = y.div_euclid(400);
        let yoe = y - era * 400;
        let doy = (153 * m + 2) / 5 + self.day as i64 - 1;
        let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        let days = era * 146_097 + doe - 719_468;
        (days + 3).rem_euclid(7) as u32
    }

    /// Calendar position of step `t`: (day of year, minute of day, weekday).
    pub fn at_step(&self, t: usize) -> StepTime {
        let minutes = self.minute_of_day() as u64 + t as u64 * STEP_MINUTES as u64;
        let days = (minutes / 1440) as u32;
        let year_len = if is_leap(self.year) { 366 } else { 365 };
        StepTime {
            day_of_year: (self.day_of_year() + days) % year_len,
            minute_of_day: (minutes % 1440) as u32,
            weekday: (self.weekday() + days) % 7,
        }
    }
}

impl fmt::Display for StartTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}T{:02}:{:02}:00", self.year, self.month, self.day, self.hour, self.minute)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepTime {
    pub day_of_year: u32,
    pub minute_of_day: u32,
    pub weekday: u32,
}

impl StepTime {
    pub fn hour(&self) -> f64 {
        self.minute_of_day as f64 / 60.0
    }
}
