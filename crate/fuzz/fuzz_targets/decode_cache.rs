#![no_main]

use intentmark_core::candidates::{decode_cache, encode_cache};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(set) = decode_cache(text) {
        assert_eq!(decode_cache(&encode_cache(&set)).expect("own output decodes"), set);
    }
});
