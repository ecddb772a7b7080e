//! Fuzzes the system-config JSON entry point: parsing plus validation must
//! never panic, whatever bytes arrive from a --config file.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = wgqed::config::SystemConfig::from_json_str(text);
    }
});
