#![no_main]

use latentnas::archspace::{nb201_to_nodeop, validate, Nb201Cell, SearchSpaceSpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(cell) = Nb201Cell::parse_arch_str(s) {
        assert_eq!(Nb201Cell::parse_arch_str(&cell.to_arch_str()).unwrap(), cell);
        let spec = SearchSpaceSpec::nasbench201();
        if let Ok(g) = nb201_to_nodeop(&cell, &spec) {
            let _ = validate(&g, &spec);
        }
    }
});
