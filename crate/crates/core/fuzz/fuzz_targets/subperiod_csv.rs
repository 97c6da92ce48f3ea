#![no_main]

use libfuzzer_sys::fuzz_target;
use pairtrade::marketdata::parse_subperiod_table;

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = parse_subperiod_table(data) {
        let again = parse_subperiod_table(table.to_csv_string().as_bytes()).expect("re-read written table");
        assert_eq!(again, table);
    }
});
