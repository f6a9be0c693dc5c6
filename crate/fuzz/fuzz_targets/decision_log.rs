#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(replay) = carbonsched_live::decision_log::parse_log(data) {
        assert!(replay.valid_len as usize <= data.len());
        // The intact prefix parses on its own with nothing torn.
        let prefix = carbonsched_live::decision_log::parse_log(&data[..replay.valid_len as usize]).expect("prefix parses");
        assert_eq!(prefix.entries, replay.entries);
    }
});
