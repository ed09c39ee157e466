#![no_main]

use libfuzzer_sys::fuzz_target;
use vipclip::config::RunConfig;

// Parsing an experiment config must never panic, and any accepted config must
// survive resolution (problem + schedule construction return errors, never
// panic). Serialization must be idempotent: emitting an accepted config and
// reparsing it yields the same document.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(config) = serde_json::from_str::<RunConfig>(text) else { return };

    // Resolution may reject the config; it must not panic or hang. Cap the
    // horizon so schedule tables stay small.
    if config.iterations <= 10_000 && config.n_seeds <= 64 {
        let _ = config.resolve();
    }

    let json = serde_json::to_string(&config).expect("accepted configs serialize");
    if let Ok(back) = serde_json::from_str::<RunConfig>(&json) {
        let json2 = serde_json::to_string(&back).expect("reparsed configs serialize");
        assert_eq!(json, json2, "config serialization must be idempotent");
    }
});
