#![no_main]

use intentmark_core::prompt::parse_preplan_scores;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let parsed = parse_preplan_scores(text);
    for s in &parsed.scores {
        assert!((0.0..=1.0).contains(&s.score));
    }
});
