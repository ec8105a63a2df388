#![no_main]

use latentnas::archspace::SearchSpaceSpec;
use latentnas::formats::{parse_dataset, write_dataset};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let spec = SearchSpaceSpec::synthetic();
    if let Ok(rows) = parse_dataset(text, &spec) {
        let again = parse_dataset(&write_dataset(rows.iter().map(|(id, c)| (*id, c))), &spec).unwrap();
        assert_eq!(rows, again);
    }
});
