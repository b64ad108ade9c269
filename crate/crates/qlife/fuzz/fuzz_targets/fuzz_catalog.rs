//! Binary catalog decoding must never panic and must round-trip through
//! the encoder for every accepted byte stream.

#![no_main]

use libfuzzer_sys::fuzz_target;
use qlife::formats::{read_catalog_entries, write_catalog_entries};

fuzz_target!(|data: &[u8]| {
    let mut reader = data;
    if let Ok(entries) = read_catalog_entries(&mut reader) {
        let mut out = Vec::new();
        write_catalog_entries(entries.iter().copied(), &mut out)
            .expect("writing parsed catalog entries");
        assert_eq!(out, data);
    }
});
