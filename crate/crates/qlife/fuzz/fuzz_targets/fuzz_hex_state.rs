//! Hex state decoding must never panic and must round-trip through the
//! encoder for every accepted input.

#![no_main]

use libfuzzer_sys::fuzz_target;
use qlife::formats::{hex_to_state, state_to_hex};

fuzz_target!(|data: &[u8]| {
    let Some((&width_byte, rest)) = data.split_first() else {
        return;
    };
    let cells = 1 + width_byte as usize;
    let Ok(hex) = std::str::from_utf8(rest) else {
        return;
    };
    if let Ok(state) = hex_to_state(hex, cells) {
        assert_eq!(state.cell_count(), cells);
        let encoded = state_to_hex(&state);
        let reparsed = hex_to_state(&encoded, cells).expect("re-reading encoded state");
        assert_eq!(reparsed, state);
    }
});
