#![no_main]

use libfuzzer_sys::fuzz_target;
use vipclip::solvers::schedule::Schedule;

// Schedules are embedded in reports for audit. Parsing arbitrary schedule
// documents must never panic, closed-form rule evaluation must be total, and
// serialization must be idempotent.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(schedule) = serde_json::from_str::<Schedule>(text) else { return };

    match &schedule {
        Schedule::Seg(s) => {
            for k in [0usize, 1, 17, 9999] {
                let _ = s.lambda1.level(k);
                let _ = s.lambda2.level(k);
                assert!(s.m1.size(k) >= 1);
                assert!(s.m2.size(k) >= 1);
            }
        }
        Schedule::Sgda(s) => {
            for k in [0usize, 1, 17, 9999] {
                let _ = s.lambda.level(k);
                assert!(s.m.size(k) >= 1);
            }
        }
    }
    if schedule.horizon() <= 10_000 {
        let _ = schedule.oracle_calls();
    }

    let json = serde_json::to_string(&schedule).expect("parsed schedules serialize");
    if let Ok(back) = serde_json::from_str::<Schedule>(&json) {
        assert_eq!(json, serde_json::to_string(&back).unwrap());
    }
});
