#![no_main]

use anderson_lab::config::render_config;
use anderson_lab::parse_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    // accepted configs must survive a render/parse round trip
    if let Ok(config) = parse_config(data) {
        let again = parse_config(&render_config(&config)).expect("rendered config parses");
        assert_eq!(config, again);
    }
});
