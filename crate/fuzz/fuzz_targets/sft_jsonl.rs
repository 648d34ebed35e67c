#![no_main]

use intentmark_core::sft::{emit_jsonl, load_jsonl, CorpusMode};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(examples) = load_jsonl(data) {
        let mut buf = Vec::new();
        emit_jsonl(&examples, CorpusMode::Multiview, &mut buf).expect("in-memory write");
        assert_eq!(load_jsonl(buf.as_slice()).expect("own output decodes"), examples);
    }
});
