#![no_main]

use latentnas::archspace::SearchSpaceSpec;
use latentnas::oracle::TabularOracle;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let spec = SearchSpaceSpec::synthetic();
    if let Ok(table) = TabularOracle::parse(&spec, text) {
        let again = TabularOracle::parse(&spec, &table.to_ndjson()).unwrap();
        assert_eq!(again.len(), table.len());
        for (k, r) in table.iter() {
            assert_eq!(again.get(k), Some(r));
        }
    }
});
