#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(trace) = carbonsched::traces::load_carbon_trace(text) {
            let again = carbonsched::traces::load_carbon_trace(&trace.to_csv()).expect("canonical trace reloads");
            assert_eq!(trace.digest(), again.digest());
        }
    }
});
