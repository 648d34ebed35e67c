#![no_main]

use intentmark_core::{parse_report, serialize_report, strip_intents, validate_report, SerializeMode};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let report = parse_report(text);
    for span in report.intent_spans() {
        assert!(span.source_range.start < span.source_range.end);
        assert!(span.source_range.end <= text.len());
    }
    for mode in SerializeMode::ALL {
        let _ = serialize_report(&report, mode);
    }
    let _ = validate_report(&report, 10);
    let once = strip_intents(text);
    assert_eq!(strip_intents(&once), once);
});
