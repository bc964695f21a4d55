#![no_main]
use libfuzzer_sys::fuzz_target;
use nlphase::fields::decode_field;

fuzz_target!(|data: &[u8]| {
    let _ = decode_field(data);
});
