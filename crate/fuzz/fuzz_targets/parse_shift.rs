#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = bclab::io::parse_shift(text) {
        // Whatever parses must also build a sequence or fail cleanly.
        let _ = spec.sequence();
    }
});
