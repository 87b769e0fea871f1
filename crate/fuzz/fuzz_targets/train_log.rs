#![no_main]

use libfuzzer_sys::fuzz_target;
use mguard_core::training::{stability_report, TrainLog};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(log) = TrainLog::from_csv(text, "fuzz") {
            let _ = stability_report(&log);
            let _ = TrainLog::from_csv(&log.to_csv(), "again").unwrap();
        }
    }
});
