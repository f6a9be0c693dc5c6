#![no_main]

use chrono::Datelike;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Some(t) = carbonsched::time::parse_timestamp(text) {
            if (0..=9999).contains(&t.year()) {
                let printed = carbonsched::time::format_timestamp(&t);
                assert_eq!(carbonsched::time::parse_timestamp(&printed), Some(t));
            }
        }
    }
});
