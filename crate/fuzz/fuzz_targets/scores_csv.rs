#![no_main]

use libfuzzer_sys::fuzz_target;
use mguard_core::detection::{parse_scores, scores_to_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = parse_scores(data, "fuzz") {
        let bytes = scores_to_csv(&rows).unwrap();
        let again = parse_scores(&bytes, "again").unwrap();
        assert_eq!(again.len(), rows.len());
    }
});
