//! Shelter-stay counting on integer day numbers.
//!
//! Timestamps are minutes since an arbitrary epoch and days are
//! `minute.div_euclid(1440)`, so the same epoch must be used for visits and
//! window ends. A visit counts toward the day on which it starts.

use alloc::vec::Vec;

pub const MINUTES_PER_DAY: i64 = 1440;

/// One shelter visit, in minutes since the caller's epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Visit {
    pub start: i64,
    pub end: i64,
}

impl Visit {
    pub fn duration_minutes(&self) -> i64 {
        self.end - self.start
    }

    pub fn start_day(&self) -> i64 {
        self.start.div_euclid(MINUTES_PER_DAY)
    }
}

/// Thresholds that define a stay and the chronic state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChronicRule {
    /// Minimum visit length for the visit to count as a stay.
    pub min_stay_minutes: i64,
    /// Length of the trailing window in whole days.
    pub window_days: i64,
    /// Stay-days within the window needed to be chronic.
    pub threshold: usize,
}

impl Default for ChronicRule {
    fn default() -> Self {
        Self { min_stay_minutes: 15, window_days: 365, threshold: 180 }
    }
}

/// Sorted, de-duplicated days on which a client had a qualifying stay.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StayDays {
    days: Vec<i64>,
}

impl StayDays {
    pub fn from_visits<'a, I>(visits: I, min_stay_minutes: i64) -> Self
    where
        I: IntoIterator<Item = &'a Visit>,
    {
        let mut days: Vec<i64> = visits
            .into_iter()
            .filter(|v| v.duration_minutes() >= min_stay_minutes)
            .map(Visit::start_day)
            .collect();
        days.sort_unstable();
        days.dedup();
        Self { days }
    }

    pub fn days(&self) -> &[i64] {
        &self.days
    }

    /// Stay-days in `(window_end - window_days, window_end]`.
    pub fn count_in(&self, window_end: i64, window_days: i64) -> usize {
        count_sorted_in(&self.days, window_end, window_days)
    }

    /// Stay-days on or before `day`.
    pub fn count_until(&self, day: i64) -> usize {
        self.days.partition_point(|&d| d <= day)
    }

    pub fn is_chronic(&self, as_of: i64, rule: &ChronicRule) -> bool {
        self.count_in(as_of, rule.window_days) >= rule.threshold
    }
}

/// Count entries of a sorted slice that fall in `(window_end - window_days, window_end]`.
pub fn count_sorted_in(sorted: &[i64], window_end: i64, window_days: i64) -> usize {
    let lo = sorted.partition_point(|&d| d <= window_end - window_days);
    let hi = sorted.partition_point(|&d| d <= window_end);
    hi.saturating_sub(lo)
}

/// Number of distinct days in `(window_end - window_days, window_end]` with at
/// least one visit lasting `min_stay_minutes` or longer.
pub fn count_stays(visits: &[Visit], window_end: i64, window_days: i64, min_stay_minutes: i64) -> usize {
    StayDays::from_visits(visits, min_stay_minutes).count_in(window_end, window_days)
}

pub fn is_chronic(visits: &[Visit], as_of: i64, rule: &ChronicRule) -> bool {
    count_stays(visits, as_of, rule.window_days, rule.min_stay_minutes) >= rule.threshold
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn visit(day: i64, minute_of_day: i64, len: i64) -> Visit {
        let start = day * MINUTES_PER_DAY + minute_of_day;
        Visit { start, end: start + len }
    }

    #[test]
    fn same_day_visits_count_once() {
        let v = vec![visit(10, 60, 20), visit(10, 300, 20), visit(10, 900, 20)];
        assert_eq!(count_stays(&v, 10, 365, 15), 1);
    }

    #[test]
    fn short_visit_is_not_a_stay() {
        assert_eq!(count_stays(&[visit(10, 0, 10)], 10, 365, 15), 0);
        assert_eq!(count_stays(&[visit(10, 0, 14)], 10, 365, 15), 0);
        assert_eq!(count_stays(&[visit(10, 0, 15)], 10, 365, 15), 1);
    }

    #[test]
    fn consecutive_daily_visits() {
        let v: Vec<Visit> = (0..200).map(|d| visit(d, 600, 30)).collect();
        assert_eq!(count_stays(&v, 199, 365, 15), 200);
        // window (99, 199] holds days 100..=199
        assert_eq!(count_stays(&v, 199, 100, 15), 100);
    }

    #[test]
    fn overnight_visit_counts_on_start_day() {
        let v = [visit(5, 23 * 60, 8 * 60)];
        assert_eq!(count_stays(&v, 5, 1, 15), 1);
        assert_eq!(count_stays(&v, 6, 1, 15), 0);
    }

    #[test]
    fn negative_days_use_floor_division() {
        let v = [Visit { start: -30, end: 0 }];
        assert_eq!(count_stays(&v, -1, 1, 15), 1);
        assert_eq!(count_stays(&v, 0, 1, 15), 0);
    }

    #[test]
    fn chronic_threshold_boundary() {
        let rule = ChronicRule::default();
        let v: Vec<Visit> = (0..180).map(|d| visit(d * 2, 0, 60)).collect();
        assert!(is_chronic(&v, 358, &rule));
        assert!(!is_chronic(&v[1..], 358, &rule));
    }

    #[test]
    fn empty_is_zero() {
        assert_eq!(count_stays(&[], 0, 365, 15), 0);
    }
}
