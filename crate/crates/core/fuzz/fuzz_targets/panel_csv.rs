#![no_main]

use libfuzzer_sys::fuzz_target;
use pairtrade::marketdata::parse_price_panel;

fuzz_target!(|data: &[u8]| {
    // Accepted panels must survive a write/read round trip.
    if let Ok(panel) = parse_price_panel(data) {
        let again = parse_price_panel(panel.to_csv_string().as_bytes()).expect("re-read written panel");
        assert_eq!(again.dates(), panel.dates());
        assert_eq!(again.tickers(), panel.tickers());
    }
});
