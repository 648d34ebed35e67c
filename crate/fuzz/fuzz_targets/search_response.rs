#![no_main]

use intentmark_core::candidates::merge_records;
use intentmark_pipeline::retrieval::{parse_keyword_response, parse_snippet_response};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let keyword = parse_keyword_response(text).unwrap_or_default();
    let snippets = parse_snippet_response(text).unwrap_or_default();
    let merged = merge_records(&keyword, &snippets);
    for (i, c) in merged.iter().enumerate() {
        assert_eq!(c.index as usize, i + 1);
    }
});
