#![no_main]

use landau_core::ProfileSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok((_, profile)) = ProfileSpec::from_json(text) {
        let v = profile.eval(0.37);
        assert!(v.is_finite());
    }
});
