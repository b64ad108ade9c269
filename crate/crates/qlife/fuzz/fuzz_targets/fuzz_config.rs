//! Flat key=value config parsing must never panic, whatever the bytes.

#![no_main]

use libfuzzer_sys::fuzz_target;
use qlife::config::FlatConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = FlatConfig::parse(text) {
        // Exercise the accessors on whatever parsed.
        let _ = config.is_empty();
        let _ = config.get("L");
        let _ = config.parsed_or::<usize>("generations", 0);
        let _ = config.require_float_list("tau_grid");
    }
});
