#![no_main]

use libfuzzer_sys::fuzz_target;
use ptkho::cli::FitSpec;

fuzz_target!(|input: &str| {
    if let Ok(spec) = input.parse::<FitSpec>() {
        let again: FitSpec = spec.to_string().parse().expect("canonical form parses");
        assert_eq!(again, spec);
    }
});
