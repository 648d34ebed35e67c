#![no_main]

use intentmark::config::FileConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = FileConfig::parse(text) {
            let _ = cfg.gateway_config();
            let _ = cfg.retrieval_config();
        }
    }
});
