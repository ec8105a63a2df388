#![no_main]

use latentnas::archspace::SearchSpaceSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(spec) = SearchSpaceSpec::from_toml(&text) {
        assert_eq!(SearchSpaceSpec::from_toml(&spec.to_toml()).unwrap(), spec);
    }
});
