#![no_main]

use intentmark_core::annotation::{AnnotationRecord, ItemId};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(id) = text.parse::<ItemId>() {
        assert_eq!(id.to_string().parse::<ItemId>(), Ok(id));
    }
    if let Ok(rec) = serde_json::from_str::<AnnotationRecord>(text) {
        let line = serde_json::to_string(&rec).unwrap();
        assert_eq!(serde_json::from_str::<AnnotationRecord>(&line).unwrap(), rec);
    }
});
