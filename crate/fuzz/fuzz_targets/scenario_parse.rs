//! Scenario files: parsing never panics and accepted documents survive a
//! canonical round trip.

#![no_main]

use chanbond::scenario::{parse_scenario, to_scenario_text};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(cfg) = parse_scenario(&text) {
        let again = parse_scenario(&to_scenario_text(&cfg)).expect("canonical text parses");
        assert_eq!(cfg, again);
    }
});
