#![no_main]

use libfuzzer_sys::fuzz_target;
use ptkho::cli::parse_config;

fuzz_target!(|input: &str| {
    // Accepted configs must survive a render/parse round trip.
    if let Ok(config) = parse_config(input) {
        let again = parse_config(&config.render()).expect("rendered config parses");
        assert_eq!(again, config);
    }
});
