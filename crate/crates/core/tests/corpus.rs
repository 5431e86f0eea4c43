//! Replays the checked-in fuzz seed corpora through the parsers: nothing
//! may panic, and the valid seeds must parse.

use std::fs;
use std::path::PathBuf;

use landau_core::config::RunConfig;
use landau_core::random_field::RealizationManifest;
use landau_core::ProfileSpec;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, String)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            (path.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "empty corpus for {target}");
    out
}

#[test]
fn config_corpus() {
    for (name, text) in seeds("config_json") {
        let parsed = RunConfig::from_json(&text);
        let expect_ok = !matches!(name.as_str(), "bad_eta.json" | "array.json");
        assert_eq!(parsed.is_ok(), expect_ok, "{name}: {parsed:?}");
        if let Ok(cfg) = parsed {
            assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg, "{name}");
        }
    }
}

#[test]
fn profile_corpus() {
    for (name, text) in seeds("profile_spec") {
        let parsed = ProfileSpec::from_json(&text);
        assert_eq!(parsed.is_ok(), name != "empty.json", "{name}: {parsed:?}");
    }
}

#[test]
fn manifest_corpus() {
    for (name, text) in seeds("realization_manifest") {
        let m = RealizationManifest::from_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let (couplings, ham) = m.build().unwrap();
        assert_eq!(couplings.seed, m.seed);
        assert_eq!(ham.n as f64 * m.h, m.l);
    }
}
