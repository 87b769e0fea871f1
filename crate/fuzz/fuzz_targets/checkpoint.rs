#![no_main]

use libfuzzer_sys::fuzz_target;
use mguard_core::model::ModelCheckpoint;

fuzz_target!(|data: &[u8]| {
    if let Ok(ckpt) = ModelCheckpoint::decode(data) {
        assert_eq!(ckpt.encode(), data);
        let _ = ckpt.generator();
        let _ = ckpt.discriminator();
    }
});
