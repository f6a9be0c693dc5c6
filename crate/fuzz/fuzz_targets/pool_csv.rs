#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(pool) = carbonsched::registry::load_pool(text) {
            // Canonical output must load back to the same pool.
            let again = carbonsched::registry::load_pool(&pool.to_csv()).expect("canonical pool reloads");
            assert_eq!(pool.digest(), again.digest());
        }
    }
});
