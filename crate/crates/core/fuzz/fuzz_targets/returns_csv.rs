#![no_main]

use libfuzzer_sys::fuzz_target;
use pairtrade::metrics::{monthly_returns, ReturnSeries};
use pairtrade::tradesim::parse_returns_csv;

fuzz_target!(|data: &[u8]| {
    // Parsed returns feed the monthly aggregation used by `report`.
    if let Ok((dates, returns)) = parse_returns_csv(data) {
        if let Ok(series) = ReturnSeries::new(dates, returns) {
            let _ = monthly_returns(&series);
        }
    }
});
