#![no_main]

use libfuzzer_sys::fuzz_target;
use ni_swarm::lti::parse_tf;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(tf) = parse_tf(text) {
        let _ = tf.poles();
        let _ = tf.dc_gain();
        let again = parse_tf(&tf.to_string()).expect("display form parses");
        assert_eq!(again.order(), tf.order());
    }
});
