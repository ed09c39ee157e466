#![no_main]

use libfuzzer_sys::fuzz_target;
use vipclip::config::{EstimatorCheckConfig, TailsConfig};

// The tails and estimator-check config parsers must never panic, and accepted
// configs must build their problems and starting points without panicking.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };

    if let Ok(cfg) = serde_json::from_str::<TailsConfig>(text) {
        if let Ok(problem) = cfg.problem.build() {
            let _ = cfg.at.resolve(&problem);
        }
        let json = serde_json::to_string(&cfg).expect("accepted configs serialize");
        if let Ok(back) = serde_json::from_str::<TailsConfig>(&json) {
            assert_eq!(json, serde_json::to_string(&back).unwrap());
        }
    }

    if let Ok(cfg) = serde_json::from_str::<EstimatorCheckConfig>(text) {
        if let Ok(problem) = cfg.problem.build() {
            let _ = cfg.at.resolve(&problem);
        }
    }
});
