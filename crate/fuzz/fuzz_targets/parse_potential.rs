#![no_main]

use bclab::TransitionMatrix;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for a in [TransitionMatrix::golden_mean(), TransitionMatrix::full(3).unwrap()] {
        if let Ok(phi) = bclab::io::parse_potential(text, &a) {
            let _ = bclab::MarkovGibbs::build(&a, &phi);
        }
    }
});
