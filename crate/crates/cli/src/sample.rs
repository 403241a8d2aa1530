//! Synthetic stand-in for the market data bundled in `data/`.
//!
//! Daily changes follow the six-variable market truth (US10Y driving JGBF at
//! lags 1 and 2); levels are their cumulative sums on business days from
//! July 2021 to December 2022.

use std::fmt::Write as _;

use chrono::{Datelike, Days, NaiveDate, Weekday};

use tscausal::synthbench::{generate, market_truth, MARKET_VARIABLES};

pub const SAMPLE_SEED: u64 = 2021;

// (starting level, scale of one daily shock) per market variable.
const LEVELS: [(f64, f64); 6] = [
    (110.5, 0.45),
    (28_700.0, 280.0),
    (4_300.0, 40.0),
    (1.45, 0.05),
    (151.8, 0.18),
    (0.05, 0.01),
];

pub fn business_days(start: NaiveDate, end: NaiveDate) -> Vec<NaiveDate> {
    let mut out = Vec::new();
    let mut d = start;
    while d <= end {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

/// CSV text of the bundled sample file.
pub fn sample_markets_csv() -> String {
    let start = NaiveDate::from_ymd_opt(2021, 7, 1).expect("valid date");
    let end = NaiveDate::from_ymd_opt(2022, 12, 30).expect("valid date");
    let dates = business_days(start, end);
    let shocks = generate(&market_truth(SAMPLE_SEED), dates.len()).expect("market truth is stable");
    let values = shocks.values();

    let mut out = String::from("Date");
    for name in MARKET_VARIABLES {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    let mut level: Vec<f64> = LEVELS.iter().map(|l| l.0).collect();
    for (t, d) in dates.iter().enumerate() {
        let _ = write!(out, "{}", d.format("%Y-%m-%d"));
        for (j, lv) in level.iter_mut().enumerate() {
            if t > 0 {
                *lv += LEVELS[j].1 * values[(t, j)];
            }
            let _ = write!(out, ",{lv:.4}");
        }
        out.push('\n');
    }
    out
}
