#![no_main]

use latentnas::tensor::{parse_checkpoint, write_checkpoint};
use latentnas::vgae::Vgae;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(ck) = parse_checkpoint(data) {
        // NaN payloads make value equality meaningless, so compare bytes
        let bytes = write_checkpoint(&ck);
        assert_eq!(write_checkpoint(&parse_checkpoint(&bytes).unwrap()), bytes);
        let _ = Vgae::from_checkpoint(&ck);
    }
});
