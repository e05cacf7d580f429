//! Matrix dumps: the first byte picks the matrix size, the rest is the CSV.

#![no_main]

use chanbond::TransitionMatrix;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&size, rest)) = data.split_first() else {
        return;
    };
    let size = size as usize % 64 + 1;
    let text = String::from_utf8_lossy(rest);
    if let Ok(m) = TransitionMatrix::from_csv(&text, size) {
        let again = TransitionMatrix::from_csv(&m.to_csv(), size).expect("dump parses");
        assert_eq!(m.max_abs_diff(&again), 0.0);
    }
});
