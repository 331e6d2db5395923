#![no_main]

use libfuzzer_sys::fuzz_target;
use ni_swarm::sim::trace::read_trace;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_trace(data) {
        assert!(rows.iter().all(|r| r.is_finite()));
    }
});
