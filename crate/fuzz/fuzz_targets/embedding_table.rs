#![no_main]

use latentnas::formats::{parse_embeddings, write_embeddings};
use latentnas::search::build_index;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = parse_embeddings(text) {
        assert_eq!(parse_embeddings(&write_embeddings(&table)).unwrap(), table);
        let Ok(index) = build_index(&table) else { return };
        let q = index.row(0).to_vec();
        assert_eq!(index.nearest_row(&q, &vec![false; index.len()]).unwrap(), 0);
    }
});
