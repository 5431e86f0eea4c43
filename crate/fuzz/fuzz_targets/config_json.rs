#![no_main]

use landau_core::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::from_json(text) {
        // Whatever parses must survive a round trip and grid validation.
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        let _ = cfg.validate_grid(Some(text));
        let _ = cfg.resolved_profile().unwrap();
    }
});
