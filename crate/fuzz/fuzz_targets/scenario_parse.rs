//! Fuzzes the user-scenario JSON entry point (`sweep --scenario file.json`):
//! parsing plus sweep validation must never panic on arbitrary bytes.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = wgqed::scenario::CustomScenario::from_json_str(text);
    }
});
