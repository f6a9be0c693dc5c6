#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(sample) = carbonsched::feed::parse_feed_sample(data) {
        assert!(sample.intensity_g_per_kwh >= 0.0 && sample.intensity_g_per_kwh.is_finite());
        assert!(sample.from < sample.to);
    }
});
