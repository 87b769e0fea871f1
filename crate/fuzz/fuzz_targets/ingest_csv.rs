#![no_main]

use libfuzzer_sys::fuzz_target;
use mguard_core::data::{ingest_reader, IngestSchema};

fuzz_target!(|data: &[u8]| {
    if let Ok(series) = ingest_reader(data, &IngestSchema::default(), "fuzz") {
        for s in series {
            if let Some(labels) = &s.labels {
                assert_eq!(labels.len(), s.readings.len());
            }
        }
    }
});
