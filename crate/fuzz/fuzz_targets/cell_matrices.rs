#![no_main]

use latentnas::archspace::{decode_cell, encode_cell, SearchSpaceSpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let spec = SearchSpaceSpec::synthetic();
    let n = spec.max_nodes;
    let split = (n * n).min(data.len());
    let (adj, ops) = data.split_at(split);
    if let Ok(cell) = decode_cell(adj, ops, &spec) {
        let enc = encode_cell(&cell, &spec).unwrap();
        assert_eq!(decode_cell(&enc.adjacency, &enc.ops, &spec).unwrap(), cell);
    }
});
