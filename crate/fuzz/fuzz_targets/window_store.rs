#![no_main]

use libfuzzer_sys::fuzz_target;
use mguard_core::data::{decode_windows, encode_windows};

fuzz_target!(|data: &[u8]| {
    if let Ok((len, windows)) = decode_windows(data) {
        // anything accepted must re-encode to the same bytes
        let again = encode_windows(len, &windows).expect("decoded store re-encodes");
        assert_eq!(again, data);
    }
});
