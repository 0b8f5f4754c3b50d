#![no_main]

use libfuzzer_sys::fuzz_target;
use ptkho::cli::{parse_time_series, render_time_series};

fuzz_target!(|input: &str| {
    if let Ok(records) = parse_time_series(input) {
        let text = render_time_series(&records);
        let again = parse_time_series(&text).expect("rendered series parses");
        assert_eq!(again.len(), records.len());
        assert_eq!(render_time_series(&again), text);
    }
});
