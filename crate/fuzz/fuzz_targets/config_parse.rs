#![no_main]

use benard_cda::config::{parse_config_str, render_config};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    // Errors are fine; panics are not. Anything accepted must survive a render/parse cycle.
    if let Ok(config) = parse_config_str(text) {
        let rendered = render_config(&config);
        let again = parse_config_str(&rendered).expect("rendered config parses");
        assert_eq!(render_config(&again), rendered);
    }
});
