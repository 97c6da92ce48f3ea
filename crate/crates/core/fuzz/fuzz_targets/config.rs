#![no_main]

use libfuzzer_sys::fuzz_target;
use pairtrade::cli::{parse_config, parse_list};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(map) = parse_config(text) {
            for value in map.values() {
                let _ = parse_list::<f64>(value);
            }
        }
    }
});
