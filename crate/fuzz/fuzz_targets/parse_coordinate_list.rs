#![no_main]

use anderson_core::model::parse_coordinate_list;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(list) = parse_coordinate_list(text) {
            assert!(list.entries.iter().all(|e| e.2.is_finite()));
            let _ = list.dim();
        }
    }
});
