#![no_main]

use libfuzzer_sys::fuzz_target;
use ni_swarm::sim::{Scenario, World};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(s) = Scenario::from_json(text) else {
        return;
    };
    // Anything accepted must re-serialize to the same scenario.
    let back = Scenario::from_json(&s.to_json()).expect("dumped config parses");
    assert_eq!(back, s);
    if let Ok(mut w) = World::new(s) {
        for _ in 0..20 {
            w.tick();
        }
    }
});
