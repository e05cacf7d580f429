#![no_main]

use chanbond::experiment::{parse_grid, MAX_GRID_POINTS};
use chanbond::scenario::KEYS;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok((param, values)) = parse_grid(text) {
            assert!(KEYS.contains(&param.as_str()));
            assert!(!values.is_empty() && values.len() <= MAX_GRID_POINTS);
        }
    }
});
