#![no_main]

use libfuzzer_sys::fuzz_target;
use mguard_core::config::{Ini, RunConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ini) = Ini::parse(text, "fuzz") {
        if let Ok(cfg) = RunConfig::from_ini(&ini) {
            // the resolved form parses back to the same configuration
            let again = RunConfig::from_ini(&Ini::parse(&cfg.to_ini(), "resolved").unwrap()).unwrap();
            assert_eq!(again.to_ini(), cfg.to_ini());
        }
    }
});
