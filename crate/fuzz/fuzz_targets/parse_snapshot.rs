#![no_main]

use libfuzzer_sys::fuzz_target;
use ptkho::cli::parse_snapshot;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let _ = parse_snapshot(&text);
});
