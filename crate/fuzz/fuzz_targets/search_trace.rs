#![no_main]

use latentnas::formats::{parse_trace, write_trace};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(events) = parse_trace(text) {
        let again = write_trace(&events);
        assert_eq!(write_trace(&parse_trace(&again).unwrap()), again);
    }
});
