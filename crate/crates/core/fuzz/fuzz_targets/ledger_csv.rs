#![no_main]

use libfuzzer_sys::fuzz_target;
use pairtrade::tradesim::parse_ledger_csv;

fuzz_target!(|data: &[u8]| {
    let _ = parse_ledger_csv(data);
});
