#![no_main]

use landau_core::random_field::RealizationManifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = RealizationManifest::from_json(text) {
        // Building is linear in the site count; skip boxes too large for a fuzz iteration.
        if m.l <= 16.0 && m.l / m.h <= 64.0 {
            let _ = m.build();
        }
    }
});
