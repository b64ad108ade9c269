//! PBM parsing must never panic, and whatever it accepts must be
//! internally consistent and survive a write/read round trip.

#![no_main]

use libfuzzer_sys::fuzz_target;
use qlife::formats::{read_pbm, write_pbm};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((width, height, state)) = read_pbm(text) {
        assert_eq!(width * height, state.cell_count());
        if width == height && width >= 2 {
            let mut out = Vec::new();
            write_pbm(&state, width, &mut out).expect("writing a parsed frame");
            let reparsed = read_pbm(std::str::from_utf8(&out).unwrap())
                .expect("re-reading a written frame");
            assert_eq!(reparsed.2, state);
        }
    }
});
